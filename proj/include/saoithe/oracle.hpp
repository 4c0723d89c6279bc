#pragma once

// Ground truth for the index and the scheduler: renewal-cycle analysis of
// threshold policies, an indifference-based index that never touches the
// urgency polynomial, exact finite-horizon DP and exhaustive enumeration on
// tiny instances, and a timestamp-level model of the pipeline.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "saoithe/dynamics.hpp"

namespace saoithe {

class OracleGuardError : public std::runtime_error {
 public:
  OracleGuardError(const std::string& what, double size_estimate)
      : std::runtime_error(what), size_estimate_(size_estimate) {}
  double size_estimate() const { return size_estimate_; }

 private:
  double size_estimate_;
};

struct ThresholdPolicy {
  std::int64_t threshold = 1;  // transmit iff aoi >= threshold
};

/// Cumulative squared age over one renewal cycle, H(H+1)(2H+1)/6.
std::int64_t cycle_cost(std::int64_t h);
/// Same quantity by direct summation of h^2.
std::int64_t cycle_cost_by_summation(std::int64_t h);

/// Long-run average cost of threshold H: [cycle_cost(H) + cost + nu] / H.
double renewal_avg_cost(std::int64_t h, double nu, double cost);

/// Argmin of renewal_avg_cost over [1, h_max]; ties go to the smaller H.
ThresholdPolicy optimal_threshold(double nu, double cost, std::int64_t h_max);

/// Subsidy at which thresholds aoi and aoi+1 cost the same:
/// aoi * J(aoi+1) - (aoi+1) * J(aoi) - cost, with J = cycle_cost.
double index_from_indifference(std::int64_t aoi, double cost);
/// Six times the indifference subsidy, for a cost already scaled by 6.
std::int64_t index_from_indifference_times6(std::int64_t aoi, std::int64_t cost_times6);

/// A tiny instance of the Lagrangian scheduling problem on the reduced chain:
/// unit transmit and forward times, greedy gateway and server, empty buffers
/// at the start, no budget gate.
struct DpProblem {
  int num_sources = 1;
  int horizon = 10;
  int aoi_cap = 8;
  int capacity = 1;
  double lambda = 0.0;
  double mu = 0.0;
  double e_tot = 0.9251;
  double c_duty_frac = 0.0;
  std::vector<double> xi;          // one intensity per slot
  std::vector<int> initial_aoi;    // one age per source

  /// Per-activation Lagrangian price in slot t.
  double activation_cost(int t) const;
  /// Joint reduced-chain state count.
  double joint_states() const;
  /// Checks the problem invariants; throws std::invalid_argument.
  void check() const;
};

inline constexpr double kMaxDpStates = 1e7;
inline constexpr double kMaxEnumeratedSequences = 1e6;

struct DpSolution {
  double optimal_cost = 0.0;
  int num_sources = 0;
  int aoi_cap = 0;
  /// policy[t][state_code] is the optimal activation bitmask in slot t.
  std::vector<std::vector<std::uint32_t>> policy;

  /// Reduced-chain code of a full simulator state (buffers must be reachable
  /// under unit timers and greedy downstream).
  std::size_t encode(const SystemState& state) const;
  std::uint32_t action(int t, const SystemState& state) const {
    return policy.at(static_cast<std::size_t>(t)).at(encode(state));
  }
};

/// Backward induction over the joint reduced chain. Throws OracleGuardError
/// when the state count exceeds kMaxDpStates.
DpSolution exact_dp(const DpProblem& problem);

/// Minimum Lagrangian cost over every feasible action sequence, each run
/// through dynamics::step. Throws OracleGuardError above
/// kMaxEnumeratedSequences sequences.
double brute_force_enumerate(const DpProblem& problem);

/// Step parameters and start state matching a DpProblem.
StepParams dp_step_params(const DpProblem& problem);
SystemState dp_initial_state(const DpProblem& problem);

using DecideFn = std::function<ActionVector(const SystemState&, int t)>;

/// Lagrangian cost of the activation rule `decide` on the problem's chain.
/// Capacity violations raise ContractError.
double rollout_cost(const DpProblem& problem, const DecideFn& decide);

/// Timestamp-level twin of the pipeline: every packet carries its generation
/// slot and ages are recomputed from timestamps rather than counters.
class ShadowPipeline {
 public:
  ShadowPipeline(int num_sources, int initial_aoi, int tx_slots, int fwd_slots, int aoi_cap);

  /// Applies one slot of actions (already known to be admissible).
  void advance(const PolicyDecision& d);

  int slot() const { return now_; }
  int aoi(int n) const;
  int gw_buffer_age(int n) const;
  int sv_buffer_age(int n) const;
  bool device_idle(int n) const;
  bool gateway_idle(int n) const;
  /// Ages delivered during the last advance(), one entry per delivery.
  const std::vector<std::pair<int, int>>& last_deliveries() const { return delivered_; }

 private:
  static constexpr int kNone = -1;
  struct Packet {
    int gen = kNone;
    int ready = 0;  // first slot at which it sits in the next buffer
  };
  struct Lane {
    int last_gen;
    Packet uplink;    // on the air
    Packet gw_buf;
    Packet forward;   // on the backhaul
    Packet sv_buf;
  };

  int age_of(int gen) const;

  std::vector<Lane> lanes_;
  int tx_;
  int fwd_;
  int cap_;
  int now_ = 0;
  std::vector<std::pair<int, int>> delivered_;
};

}  // namespace saoithe
