#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "saoithe/oracle.hpp"
#include "saoithe/policies.hpp"

#include "json.hpp"

namespace saoithe {

struct CheckResult {
  std::string suite;
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckResult> checks;

  bool pass() const;
  nlohmann::json to_json() const;
};

/// Runs the named suite: whittle | oracle | dynamics | all. Throws
/// std::invalid_argument for any other name.
ValidationReport run_validation(const std::string& suite, std::uint64_t seed = 1);

// Building blocks shared with the test programs.

struct ShadowCheck {
  long steps = 0;
  long deliveries = 0;
  long mismatches = 0;
  std::string first_mismatch;
};

/// Drives the counter pipeline and the timestamp pipeline with the same
/// random admissible decisions and compares ages, buffers and deliveries
/// after every step. Timers are drawn in [1, 3].
ShadowCheck shadow_equivalence(long steps, std::uint64_t seed);

/// A random reduced-chain instance: N in {1, 2}, horizon in [min_t, max_t],
/// cap in [3, 8], constant or varying intensity.
DpProblem random_dp_problem(std::mt19937_64& rng, int min_t, int max_t, int max_sources = 2);

/// Lagrangian cost of SAOITHE on a reduced-chain instance, priced with the
/// problem's multipliers.
double saoithe_rollout_cost(const DpProblem& problem, const SaoitheOptions& opts = {});

struct OracleComparison {
  DpProblem problem;
  double dp_cost = 0.0;
  double saoithe_cost = 0.0;
  std::optional<double> brute_cost;  // when enumeration fits its guard

  double gap() const { return dp_cost > 0.0 ? saoithe_cost / dp_cost - 1.0 : 0.0; }
};

OracleComparison compare_with_oracle(const DpProblem& problem, const SaoitheOptions& opts = {});

}  // namespace saoithe
