#pragma once

#include <stdexcept>

namespace duqbench {

// Base class for all framework errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : Error { using Error::Error; };         // bad argument / precondition
struct NotFoundError : Error { using Error::Error; };       // unknown name
struct ConflictError : Error { using Error::Error; };       // duplicate registration
struct SchemaError : Error { using Error::Error; };         // table/CSV schema mismatch
struct ConfigError : Error { using Error::Error; };         // bad study configuration
struct NotImplementedError : Error { using Error::Error; };

// Emulator failure signals. The harness catches these and substitutes the
// fallback model; they are not user-facing errors.
struct FitFailure : Error { using Error::Error; };
struct PredFailure : Error { using Error::Error; };

}  // namespace duqbench
