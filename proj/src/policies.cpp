#include "saoithe/policies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace saoithe {

const char* to_string(ForwardingMode m) {
  return m == ForwardingMode::greedy ? "greedy" : "index_gated";
}

ForwardingMode forwarding_mode_from_string(const std::string& s) {
  if (s == "greedy") return ForwardingMode::greedy;
  if (s == "index_gated") return ForwardingMode::index_gated;
  throw std::invalid_argument("unknown forwarding mode '" + s + "'");
}

const char* to_string(OutstandingRule r) {
  switch (r) {
    case OutstandingRule::effective_age:
      return "effective_age";
    case OutstandingRule::skip:
      return "skip";
    case OutstandingRule::literal:
      return "literal";
  }
  return "?";
}

OutstandingRule outstanding_rule_from_string(const std::string& s) {
  if (s == "effective_age") return OutstandingRule::effective_age;
  if (s == "skip") return OutstandingRule::skip;
  if (s == "literal") return OutstandingRule::literal;
  throw std::invalid_argument("unknown outstanding rule '" + s + "'");
}

namespace {

// Age of the freshest update that is certain to reach the server, 0 if none.
// A packet held at the gateway only counts when greedy forwarding will move it.
int freshest_in_flight(const SourceState& s, ForwardingMode mode) {
  int best = 0;
  auto take = [&best](int age) {
    if (age > 0 && (best == 0 || age < best)) best = age;
  };
  if (mode == ForwardingMode::greedy) take(s.gw_buf_age);
  if (s.gw_busy) take(s.gw_fwd_age);
  take(s.sv_buf_age);
  return best;
}

}  // namespace

std::vector<IndexEntry> saoithe_indices(const SystemState& state, double cost,
                                        const SaoitheOptions& opts) {
  std::vector<IndexEntry> out(state.sources.size());
  const bool gated = opts.forwarding == ForwardingMode::index_gated;
  for (std::size_t i = 0; i < state.sources.size(); ++i) {
    const SourceState& s = state.sources[i];
    IndexEntry& e = out[i];
    if (!s.dev_busy) {
      const int pending = freshest_in_flight(s, opts.forwarding);
      switch (opts.outstanding) {
        case OutstandingRule::effective_age:
          e.index = urgency(pending > 0 ? std::min(pending, s.aoi) : s.aoi) - cost;
          e.candidate = true;
          break;
        case OutstandingRule::skip:
          if (pending == 0) {
            e.index = urgency(s.aoi) - cost;
            e.candidate = true;
          }
          break;
        case OutstandingRule::literal:
          e.index = (!gated && s.gw_buf_age > 0 && !s.gw_busy)
                        ? (urgency(s.aoi) - urgency(std::min(s.gw_buf_age, s.aoi))) - cost
                        : urgency(s.aoi) - cost;
          e.candidate = true;
          break;
      }
    }
    if (gated && s.gw_buf_age > 0 && !s.gw_busy) {
      const double fwd = (urgency(s.aoi) - urgency(std::min(s.gw_buf_age, s.aoi))) - cost;
      if (!e.candidate || fwd >= e.index) {
        e.index = fwd;
        e.gateway = true;
        e.candidate = true;
      }
    }
  }
  return out;
}

std::vector<int> select_top_m(const std::vector<IndexEntry>& entries, int m) {
  std::vector<int> ids;
  ids.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].candidate && entries[i].index > 0.0) ids.push_back(static_cast<int>(i));
  }
  std::sort(ids.begin(), ids.end(), [&entries](int a, int b) {
    const double wa = entries[static_cast<std::size_t>(a)].index;
    const double wb = entries[static_cast<std::size_t>(b)].index;
    return wa > wb || (wa == wb && a < b);
  });
  if (m < 0) m = 0;
  if (ids.size() > static_cast<std::size_t>(m)) ids.resize(static_cast<std::size_t>(m));
  return ids;
}

PolicyDecision saoithe_decide(const SystemState& state, const IndexContext& ctx, int capacity,
                              const SaoitheOptions& opts) {
  const auto entries = saoithe_indices(state, ctx.cost(), opts);
  PolicyDecision d = PolicyDecision::none(state.size());
  apply_greedy_downstream(state, d);
  if (opts.forwarding == ForwardingMode::index_gated) {
    std::fill(d.a_gw.begin(), d.a_gw.end(), 0);
  }
  for (int id : select_top_m(entries, capacity)) {
    const auto i = static_cast<std::size_t>(id);
    if (entries[i].gateway) {
      d.a_gw[i] = 1;
    } else {
      d.a_dev[i] = 1;
    }
  }
  return d;
}

SaoithePolicy::SaoithePolicy(double lambda, double mu, double e_tot, double c_duty_frac,
                             int capacity, SaoitheOptions opts)
    : lambda_(lambda), mu_(mu), e_tot_(e_tot), c_duty_frac_(c_duty_frac), capacity_(capacity),
      opts_(opts) {
  if (!(lambda >= 0.0) || !(mu >= 0.0)) {
    throw std::domain_error("shadow prices must be non-negative");
  }
}

PolicyDecision SaoithePolicy::decide(const SystemState& state, double xi, const BudgetLedger&) {
  return saoithe_decide(state, context(xi), capacity_, opts_);
}

nlohmann::json SaoithePolicy::metadata() const {
  return {{"policy", name()},
          {"lambda", lambda_},
          {"mu", mu_},
          {"forwarding", to_string(opts_.forwarding)},
          {"outstanding", to_string(opts_.outstanding)}};
}

std::vector<int> staggered_offsets(int num_sources, int period) {
  std::vector<int> out(static_cast<std::size_t>(num_sources));
  for (int n = 0; n < num_sources; ++n) {
    out[static_cast<std::size_t>(n)] =
        static_cast<int>(static_cast<std::int64_t>(n) * period / num_sources);
  }
  return out;
}

RoundRobinPolicy::RoundRobinPolicy(RoundRobinParams params, int num_sources, int capacity)
    : params_(std::move(params)), capacity_(capacity) {
  if (params_.period < 1) {
    throw std::invalid_argument("round robin period must be >= 1");
  }
  if (params_.phase_offsets.empty()) {
    params_.phase_offsets = staggered_offsets(num_sources, params_.period);
  }
  if (static_cast<int>(params_.phase_offsets.size()) != num_sources) {
    throw std::invalid_argument("round robin needs one phase offset per source");
  }
  due_.assign(static_cast<std::size_t>(num_sources), 0);
}

void RoundRobinPolicy::reset(std::uint64_t) { std::fill(due_.begin(), due_.end(), 0); }

PolicyDecision RoundRobinPolicy::decide(const SystemState& state, double, const BudgetLedger&) {
  const int n = state.size();
  if (n != static_cast<int>(due_.size())) {
    throw ContractError("state size does not match the round robin schedule");
  }
  PolicyDecision d = PolicyDecision::none(n);
  apply_greedy_downstream(state, d);
  const int p = params_.period;
  int used = 0;
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const int phase = ((state.slot - params_.phase_offsets[k]) % p + p) % p;
    if (phase == 0) due_[k] = 1;
    if (!due_[k]) continue;
    if (state.sources[k].dev_busy) {
      due_[k] = 0;  // missed while transmitting
      continue;
    }
    if (used < capacity_) {
      d.a_dev[k] = 1;
      due_[k] = 0;
      ++used;
    }
  }
  return d;
}

nlohmann::json RoundRobinPolicy::metadata() const {
  return {{"policy", name()}, {"period", params_.period}};
}

RandomPolicy::RandomPolicy(RandomParams params, int capacity)
    : params_(params), capacity_(capacity), rng_(params.seed) {
  if (!(params.tx_probability >= 0.0 && params.tx_probability <= 1.0)) {
    throw std::invalid_argument("transmission probability must lie in [0, 1]");
  }
}

void RandomPolicy::reset(std::uint64_t seed) {
  params_.seed = seed;
  rng_.seed(seed);
}

double RandomPolicy::uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

PolicyDecision RandomPolicy::decide(const SystemState& state, double, const BudgetLedger&) {
  PolicyDecision d = PolicyDecision::none(state.size());
  apply_greedy_downstream(state, d);
  std::vector<int> hits;
  for (int i = 0; i < state.size(); ++i) {
    if (state.sources[static_cast<std::size_t>(i)].dev_busy) continue;
    if (uniform() < params_.tx_probability) hits.push_back(i);
  }
  if (static_cast<int>(hits.size()) > capacity_) {
    // Partial Fisher-Yates: a uniform random subset of size capacity.
    for (int k = 0; k < capacity_; ++k) {
      const auto remaining = hits.size() - static_cast<std::size_t>(k);
      const auto j = static_cast<std::size_t>(k) +
                     static_cast<std::size_t>(uniform() * static_cast<double>(remaining));
      std::swap(hits[static_cast<std::size_t>(k)], hits[std::min(j, hits.size() - 1)]);
    }
    hits.resize(static_cast<std::size_t>(capacity_));
  }
  for (int i : hits) d.a_dev[static_cast<std::size_t>(i)] = 1;
  return d;
}

nlohmann::json RandomPolicy::metadata() const {
  return {{"policy", name()}, {"tx_probability", params_.tx_probability}, {"seed", params_.seed}};
}

int derive_rr_period(double kappa_grams, const CarbonTrace& trace, double e_tot, int num_sources,
                     int horizon) {
  const double mean_xi = trace.mean();
  if (!(mean_xi > 0.0) || !(e_tot > 0.0)) {
    throw std::invalid_argument("mean intensity and update energy must be positive");
  }
  const double per_update = carbon_cost(mean_xi, e_tot);
  const double ratio = kappa_grams / per_update;
  // Absorb round-off when the budget is an exact multiple of one update.
  const auto k = static_cast<std::int64_t>(std::floor(ratio * (1.0 + 1e-12)));
  if (k <= 0) {
    throw std::invalid_argument("budget permits no transmissions");
  }
  const auto demand = static_cast<std::int64_t>(num_sources) * horizon;
  const std::int64_t p = (demand + k - 1) / k;
  return static_cast<int>(std::clamp<std::int64_t>(p, 1, horizon));
}

}  // namespace saoithe
