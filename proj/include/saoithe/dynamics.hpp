#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "saoithe/core_model.hpp"

namespace saoithe {

struct IndexContext;

/// Thrown when a decision breaks capacity or idleness rules. Decisions are
/// never repaired silently.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Per-source state. Buffer ages of 0 mean empty.
struct SourceState {
  int aoi = 1;
  bool dev_busy = false;
  int dev_timer = 0;
  int gw_buf_age = 0;
  bool gw_busy = false;
  int gw_timer = 0;
  int sv_buf_age = 0;
  /// Age of the packet the gateway is currently forwarding (0 when idle).
  int gw_fwd_age = 0;

  bool operator==(const SourceState&) const = default;
};

struct SystemState {
  std::vector<SourceState> sources;
  int slot = 0;

  int size() const { return static_cast<int>(sources.size()); }
  bool operator==(const SystemState&) const = default;
};

using ActionVector = std::vector<std::uint8_t>;

struct PolicyDecision {
  ActionVector a_dev;
  ActionVector a_gw;
  ActionVector a_sv;

  static PolicyDecision none(int n);
  int activations() const;
};

struct SlotMetrics {
  double staleness_cost = 0.0;  // sum of squared AoI at slot start
  double aoi_sum = 0.0;         // sum of AoI at slot start
  int activations = 0;
  int deliveries = 0;
  int dropped = 0;
  double energy_spent = 0.0;  // J
  double cf_spent = 0.0;      // gCO2eq
  double duty_spent = 0.0;    // fraction of horizon
  std::vector<int> blocked_by_budget;  // ids whose activation the gate suppressed
};

/// Static parameters of the transition system, derived from a config.
struct StepParams {
  int tx_slots = 1;
  int fwd_slots = 1;
  int aoi_cap = 288;
  int capacity = 8;
  double e_tot = 0.9251;
  StageEnergy stages{0.9251, 0.0, 0.0};
  EnergyAttribution attribution = EnergyAttribution::single;
  double duty_per_tx = 0.0;
  bool gate = true;
};

StepParams step_params(const ValidatedConfig& cfg, bool gate);

struct StepOutcome {
  SystemState state;
  SlotMetrics metrics;
  BudgetLedger ledger;
};

SystemState initial_state(int num_sources, int initial_aoi);
SystemState initial_state(const ValidatedConfig& cfg);

/// Sources that may start a transmission (device idle). Capacity is applied
/// by the policy.
std::vector<std::uint8_t> feasibility_mask(const SystemState& state);

/// Uplink completion: device busy with one slot left on its timer.
bool uplink_indicator(const SourceState& src);

/// Throws ContractError when the decision is not admissible in `state`.
void check_decision(const SystemState& state, const PolicyDecision& d, int capacity);

/// Sets a_gw / a_sv for every source whose gateway or server can act.
void apply_greedy_downstream(const SystemState& state, PolicyDecision& d);

/// One slot of the three-stage pipeline: device, then gateway, then server.
/// Device activations that would push the ledger past either budget are
/// suppressed (when params.gate) and reported in metrics.blocked_by_budget.
StepOutcome step(const SystemState& state, const PolicyDecision& decision, double xi,
                 const BudgetLedger& ledger, const StepParams& params);

/// Sum of squared AoI.
double instantaneous_cost(const SystemState& state);

/// Per-slot Lagrangian cost with single-charge energy: squared AoI plus the
/// priced carbon and duty of every device activation.
double lagrangian_cost(const SystemState& state, const PolicyDecision& decision,
                       const IndexContext& ctx);

}  // namespace saoithe
