#pragma once

namespace duqbench {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace duqbench
