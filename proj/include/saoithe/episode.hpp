#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "saoithe/core_model.hpp"
#include "saoithe/dynamics.hpp"
#include "saoithe/policies.hpp"
#include "saoithe/traces.hpp"

#include "json.hpp"

namespace saoithe {

/// Everything one simulated horizon produced.
struct EpisodeResult {
  std::string policy;
  std::string region;
  int num_sources = 0;
  int horizon = 0;
  double slot_duration = 300.0;
  bool gate = true;

  std::vector<SlotMetrics> per_slot;
  /// aoi_trajectories[n][t]: age of source n at the start of slot t.
  std::vector<std::vector<int>> aoi_trajectories;
  std::vector<double> cf_cumulative;    // after each slot, gCO2eq
  std::vector<double> duty_cumulative;  // after each slot, fraction

  double avg_aoi_slots = 0.0;
  double avg_aoi_minutes = 0.0;
  double total_cf = 0.0;
  double total_duty = 0.0;
  double total_energy = 0.0;  // J
  /// Infrastructure overhead, priced at each slot's intensity; not budgeted.
  double idle_cf = 0.0;
  int total_activations = 0;
  int total_deliveries = 0;
  int total_blocked = 0;
  double cf_budget = 0.0;
  double duty_budget = 0.0;
  /// First slot in which a budget stopped (gate on) or was overrun (gate off).
  std::optional<int> budget_exhausted_at;
  /// Slots whose cumulative CF or duty exceeds its budget.
  int prefix_violations = 0;

  nlohmann::json policy_metadata;
  std::uint64_t seed = 0;
  std::string config_digest;
};

/// FNV-1a 64-bit digest as 16 hex digits.
std::string digest_hex(const std::string& bytes);

/// Digest of the canonical text form of a config.
std::string config_digest(const SimConfig& cfg);

/// Runs one horizon: the policy decides, dynamics advance, the ledger and
/// metrics accrue. The trace must cover the horizon. The policy is reset
/// with `seed` first.
EpisodeResult run_episode(const ValidatedConfig& cfg, const CarbonTrace& trace, Policy& policy,
                          bool gate, std::uint64_t seed);
EpisodeResult run_episode(const ValidatedConfig& cfg, const CarbonTrace& trace, Policy& policy,
                          bool gate);

}  // namespace saoithe
