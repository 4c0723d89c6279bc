#include "saoithe/episode.hpp"

#include <cstdio>
#include <stdexcept>

#include "saoithe/config_io.hpp"

namespace saoithe {

std::string digest_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_digest(const SimConfig& cfg) { return digest_hex(format_config(cfg)); }

EpisodeResult run_episode(const ValidatedConfig& cfg, const CarbonTrace& trace, Policy& policy,
                          bool gate) {
  return run_episode(cfg, trace, policy, gate, cfg.raw().rng_seed);
}

EpisodeResult run_episode(const ValidatedConfig& cfg, const CarbonTrace& trace, Policy& policy,
                          bool gate, std::uint64_t seed) {
  const int T = cfg.horizon();
  const int N = cfg.num_sources();
  if (trace.size() < T) {
    throw std::invalid_argument("trace holds " + std::to_string(trace.size()) +
                                " slots, horizon needs " + std::to_string(T));
  }
  policy.reset(seed);

  EpisodeResult r;
  r.policy = policy.name();
  r.region = trace.region_label;
  r.num_sources = N;
  r.horizon = T;
  r.slot_duration = cfg.raw().slot_duration;
  r.gate = gate;
  r.seed = seed;
  r.config_digest = config_digest(cfg.raw());
  r.cf_budget = cfg.kappa_grams();
  r.duty_budget = cfg.raw().duty_budget;
  r.per_slot.reserve(static_cast<std::size_t>(T));
  r.cf_cumulative.reserve(static_cast<std::size_t>(T));
  r.duty_cumulative.reserve(static_cast<std::size_t>(T));
  r.aoi_trajectories.assign(static_cast<std::size_t>(N), std::vector<int>(static_cast<std::size_t>(T)));

  const StepParams params = step_params(cfg, gate);
  BudgetLedger ledger{0.0, 0.0, r.cf_budget, r.duty_budget};
  SystemState state = initial_state(cfg);
  const double idle_energy = cfg.raw().energy.idle_power * r.slot_duration;
  double aoi_total = 0.0;

  for (int t = 0; t < T; ++t) {
    const double xi = trace.xi[static_cast<std::size_t>(t)];
    for (int n = 0; n < N; ++n) {
      r.aoi_trajectories[static_cast<std::size_t>(n)][static_cast<std::size_t>(t)] =
          state.sources[static_cast<std::size_t>(n)].aoi;
    }
    const PolicyDecision d = policy.decide(state, xi, ledger);
    StepOutcome out = step(state, d, xi, ledger, params);
    state = std::move(out.state);
    ledger = out.ledger;

    const SlotMetrics& m = out.metrics;
    aoi_total += m.aoi_sum;
    r.total_energy += m.energy_spent;
    r.total_activations += m.activations;
    r.total_deliveries += m.deliveries;
    r.total_blocked += static_cast<int>(m.blocked_by_budget.size());
    r.idle_cf += carbon_cost(xi, idle_energy);
    r.cf_cumulative.push_back(ledger.cf_spent);
    r.duty_cumulative.push_back(ledger.duty_spent);

    const bool over = ledger.cf_spent > ledger.cf_budget * (1.0 + 1e-12) ||
                      ledger.duty_spent > ledger.duty_budget * (1.0 + 1e-12);
    if (over) ++r.prefix_violations;
    if (!r.budget_exhausted_at && (!m.blocked_by_budget.empty() || over)) {
      r.budget_exhausted_at = t;
    }
    r.per_slot.push_back(std::move(out.metrics));
  }

  r.total_cf = ledger.cf_spent;
  r.total_duty = ledger.duty_spent;
  r.avg_aoi_slots = aoi_total / (static_cast<double>(N) * T);
  r.avg_aoi_minutes = r.avg_aoi_slots * r.slot_duration / 60.0;
  r.policy_metadata = policy.metadata();
  return r;
}

}  // namespace saoithe
