#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "saoithe/core_model.hpp"
#include "saoithe/dynamics.hpp"
#include "saoithe/traces.hpp"
#include "saoithe/whittle.hpp"

#include "json.hpp"

namespace saoithe {

/// Scheduling policy contract. Decisions always satisfy the capacity and
/// idleness rules; downstream actions are filled in as well.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual PolicyDecision decide(const SystemState& state, double xi, const BudgetLedger& ledger) = 0;
  virtual std::string name() const = 0;
  virtual void reset(std::uint64_t seed) = 0;
  /// Parameters echoed into result metadata.
  virtual nlohmann::json metadata() const = 0;
};

enum class ForwardingMode {
  greedy,       // gateway forwards as soon as it can; indices drive devices only
  index_gated,  // a held packet is forwarded only when its buffered index wins
};

const char* to_string(ForwardingMode m);
ForwardingMode forwarding_mode_from_string(const std::string& s);

/// How an idle device whose previous update is still in the pipeline is
/// ranked.
enum class OutstandingRule {
  effective_age,  // rank by the age the source will have once that update lands
  skip,           // not a candidate until the pipeline is empty
  literal,        // rank by the delivered age; a gateway-held packet gives the
                  // buffered index, and selection still activates the device
};

const char* to_string(OutstandingRule r);
OutstandingRule outstanding_rule_from_string(const std::string& s);

struct SaoitheOptions {
  ForwardingMode forwarding = ForwardingMode::greedy;
  OutstandingRule outstanding = OutstandingRule::effective_age;
};

/// Per-source index for one slot: U(age) - C for activation candidates, the
/// buffered index for gateway candidates (index-gated mode), 0 otherwise.
struct IndexEntry {
  double index = 0.0;
  bool gateway = false;  // selection means forward rather than activate
  bool candidate = false;
};

std::vector<IndexEntry> saoithe_indices(const SystemState& state, double cost,
                                        const SaoitheOptions& opts = {});

/// Ids of at most `m` candidates with strictly positive index, best first;
/// ties favour the lower id.
std::vector<int> select_top_m(const std::vector<IndexEntry>& entries, int m);

PolicyDecision saoithe_decide(const SystemState& state, const IndexContext& ctx, int capacity,
                              const SaoitheOptions& opts = {});

class SaoithePolicy final : public Policy {
 public:
  SaoithePolicy(double lambda, double mu, double e_tot, double c_duty_frac, int capacity,
                SaoitheOptions opts = {});

  PolicyDecision decide(const SystemState& state, double xi, const BudgetLedger& ledger) override;
  std::string name() const override { return "saoithe"; }
  void reset(std::uint64_t) override {}
  nlohmann::json metadata() const override;

  IndexContext context(double xi) const { return {lambda_, mu_, xi, e_tot_, c_duty_frac_}; }

 private:
  double lambda_;
  double mu_;
  double e_tot_;
  double c_duty_frac_;
  int capacity_;
  SaoitheOptions opts_;
};

struct RoundRobinParams {
  int period = 1;
  std::vector<int> phase_offsets;  // one per source; empty = evenly staggered
};

/// Evenly staggered offsets floor(n * period / N).
std::vector<int> staggered_offsets(int num_sources, int period);

class RoundRobinPolicy final : public Policy {
 public:
  RoundRobinPolicy(RoundRobinParams params, int num_sources, int capacity);

  PolicyDecision decide(const SystemState& state, double xi, const BudgetLedger& ledger) override;
  std::string name() const override { return "round_robin"; }
  void reset(std::uint64_t seed) override;
  nlohmann::json metadata() const override;

 private:
  RoundRobinParams params_;
  int capacity_;
  std::vector<std::uint8_t> due_;
};

struct RandomParams {
  double tx_probability = 0.0;
  std::uint64_t seed = 1;
};

class RandomPolicy final : public Policy {
 public:
  RandomPolicy(RandomParams params, int capacity);

  PolicyDecision decide(const SystemState& state, double xi, const BudgetLedger& ledger) override;
  std::string name() const override { return "random"; }
  void reset(std::uint64_t seed) override;
  nlohmann::json metadata() const override;

 private:
  double uniform();

  RandomParams params_;
  int capacity_;
  std::mt19937_64 rng_;
};

/// Per-source period from the number of updates the budget buys at the
/// trace's mean intensity: K = floor(kappa / cf(mean xi)), p = ceil(N T / K),
/// clamped to [1, T]. Throws std::invalid_argument when K = 0.
int derive_rr_period(double kappa_grams, const CarbonTrace& trace, double e_tot, int num_sources,
                     int horizon);

}  // namespace saoithe
