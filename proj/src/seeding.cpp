#include "duqbench/seeding.hpp"

#include <charconv>
#include <cmath>

#include "duqbench/errors.hpp"

namespace duqbench {

namespace {
constexpr std::uint64_t kHashBase = 31;
constexpr std::uint64_t kHashPrime = (1ULL << 61) - 1;
}  // namespace

std::string to_string(CvType t) {
  return t == CvType::cross_validation ? "cross_validation" : "bootstrap";
}

CvType cv_type_from_string(const std::string& s) {
  if (s == "cross_validation") return CvType::cross_validation;
  if (s == "bootstrap") return CvType::bootstrap;
  throw DomainError("unknown cv_type: " + s);
}

Scenario Scenario::synthetic(std::string fname, int n_train, double nsr,
                             std::string design_type, int replication) {
  Scenario s;
  s.kind = ScenarioKind::synthetic;
  s.name = std::move(fname);
  s.n_train = n_train;
  s.nsr = nsr;
  s.design_type = std::move(design_type);
  s.replication = replication;
  return s;
}

Scenario Scenario::dataset(std::string dname, CvType cv_type, int fold_size,
                           int fold) {
  Scenario s;
  s.kind = ScenarioKind::dataset;
  s.name = std::move(dname);
  s.cv_type = cv_type;
  s.fold_size = fold_size;
  s.fold = fold;
  return s;
}

std::uint64_t poly_hash(std::string_view s) {
  std::uint64_t h = 0;
  for (unsigned char b : s) {
    h = static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(h) * kHashBase + b) % kHashPrime);
  }
  return h;
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw DomainError("format_double failed");
  return std::string(buf, ptr);
}

bool valid_identifier(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '.' ||
                    c == '-' || c == '+';
    if (!ok) return false;
  }
  return true;
}

std::string canonical_string(const Scenario& s) {
  if (!valid_identifier(s.name)) {
    throw DomainError("scenario name is not a valid identifier: '" + s.name +
                      "'");
  }
  if (s.kind == ScenarioKind::synthetic) {
    if (s.n_train < 1) throw DomainError("scenario requires n_train >= 1");
    if (!(s.nsr >= 0.0) || !std::isfinite(s.nsr)) {
      throw DomainError("scenario requires finite NSR >= 0");
    }
    if (s.design_type != "LHS" && s.design_type != "maximin_LHS" &&
        s.design_type != "uniform") {
      throw DomainError("unknown design_type: '" + s.design_type + "'");
    }
    if (s.replication < 1) throw DomainError("replication must be >= 1");
    return s.name + "|" + std::to_string(s.n_train) + "|" +
           format_double(s.nsr) + "|" + s.design_type +
           "|rep=" + std::to_string(s.replication);
  }
  if (s.fold < 1) throw DomainError("fold must be >= 1");
  if (s.fold_size < 1) throw DomainError("fold_size must be >= 1");
  return s.name + "|" + to_string(s.cv_type) + "|" +
         std::to_string(s.fold_size) + "|fold=" + std::to_string(s.fold);
}

std::uint64_t scenario_seed(const Scenario& s) {
  return poly_hash(canonical_string(s));
}

}  // namespace duqbench
