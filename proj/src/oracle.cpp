#include "saoithe/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "saoithe/whittle.hpp"

namespace saoithe {

std::int64_t cycle_cost(std::int64_t h) {
  if (h < 0) {
    throw std::domain_error("cycle length must be non-negative");
  }
  return h * (h + 1) * (2 * h + 1) / 6;
}

std::int64_t cycle_cost_by_summation(std::int64_t h) {
  std::int64_t sum = 0;
  for (std::int64_t k = 1; k <= h; ++k) {
    sum += k * k;
  }
  return sum;
}

double renewal_avg_cost(std::int64_t h, double nu, double cost) {
  if (h < 1) {
    throw std::domain_error("threshold must be >= 1");
  }
  return (static_cast<double>(cycle_cost(h)) + cost + nu) / static_cast<double>(h);
}

ThresholdPolicy optimal_threshold(double nu, double cost, std::int64_t h_max) {
  if (h_max < 1) {
    throw std::domain_error("h_max must be >= 1");
  }
  // Compare [J(a) + c] / a against [J(b) + c] / b by cross-multiplication so
  // exact ties stay ties.
  const long double c = static_cast<long double>(cost) + static_cast<long double>(nu);
  std::int64_t best = 1;
  long double best_num = static_cast<long double>(cycle_cost(1)) + c;
  for (std::int64_t h = 2; h <= h_max; ++h) {
    const long double num = static_cast<long double>(cycle_cost(h)) + c;
    if (num * best < best_num * h) {
      best = h;
      best_num = num;
    }
  }
  return {best};
}

double index_from_indifference(std::int64_t aoi, double cost) {
  if (aoi < 1) {
    throw std::domain_error("aoi must be >= 1");
  }
  const auto subsidy = aoi * cycle_cost(aoi + 1) - (aoi + 1) * cycle_cost(aoi);
  return static_cast<double>(subsidy) - cost;
}

std::int64_t index_from_indifference_times6(std::int64_t aoi, std::int64_t cost_times6) {
  if (aoi < 1) {
    throw std::domain_error("aoi must be >= 1");
  }
  return 6 * (aoi * cycle_cost(aoi + 1) - (aoi + 1) * cycle_cost(aoi)) - cost_times6;
}

// ---------------------------------------------------------------------------
// Reduced chain

double DpProblem::activation_cost(int t) const {
  IndexContext ctx{lambda, mu, xi.at(static_cast<std::size_t>(t)), e_tot, c_duty_frac};
  return ctx.cost();
}

double DpProblem::joint_states() const {
  return std::pow(static_cast<double>(aoi_cap) * 4.0, num_sources);
}

void DpProblem::check() const {
  if (num_sources < 1 || num_sources > 2) {
    throw std::invalid_argument("DP supports 1 or 2 sources");
  }
  if (horizon < 1 || horizon > 30) {
    throw std::invalid_argument("DP horizon must lie in [1, 30]");
  }
  if (aoi_cap < 3 || aoi_cap > 8) {
    throw std::invalid_argument("DP aoi cap must lie in [3, 8]");
  }
  if (capacity < 0) {
    throw std::invalid_argument("capacity must be >= 0");
  }
  if (!(lambda >= 0.0) || !(mu >= 0.0)) {
    throw std::invalid_argument("multipliers must be non-negative");
  }
  if (static_cast<int>(xi.size()) != horizon) {
    throw std::invalid_argument("xi must hold one value per slot");
  }
  if (static_cast<int>(initial_aoi.size()) != num_sources) {
    throw std::invalid_argument("initial_aoi must hold one value per source");
  }
  for (int a : initial_aoi) {
    if (a < 1 || a > aoi_cap) {
      throw std::invalid_argument("initial aoi outside [1, aoi_cap]");
    }
  }
}

namespace {

struct Lane {
  int aoi;
  int at_gateway;  // packet of age 1 waiting at the gateway
  int at_server;   // packet of age 2 waiting at the server
};

int lane_code(const Lane& l) { return (l.aoi - 1) * 4 + l.at_gateway * 2 + l.at_server; }

Lane lane_decode(int code) { return {code / 4 + 1, (code / 2) % 2, code % 2}; }

Lane lane_next(const Lane& l, int activate, int cap) {
  Lane n;
  n.aoi = l.at_server ? std::min(3, cap) : std::min(l.aoi + 1, cap);
  n.at_server = l.at_gateway;
  n.at_gateway = activate;
  return n;
}

}  // namespace

std::size_t DpSolution::encode(const SystemState& state) const {
  if (state.size() != num_sources) {
    throw std::invalid_argument("state size does not match the DP instance");
  }
  const std::size_t base = static_cast<std::size_t>(aoi_cap) * 4;
  std::size_t code = 0;
  std::size_t mult = 1;
  for (const SourceState& s : state.sources) {
    if (s.dev_busy || s.gw_busy || (s.gw_buf_age != 0 && s.gw_buf_age != 1) ||
        (s.sv_buf_age != 0 && s.sv_buf_age != 2) || s.aoi < 1 || s.aoi > aoi_cap) {
      throw std::invalid_argument("state is outside the reduced chain");
    }
    const Lane l{s.aoi, s.gw_buf_age ? 1 : 0, s.sv_buf_age ? 1 : 0};
    code += static_cast<std::size_t>(lane_code(l)) * mult;
    mult *= base;
  }
  return code;
}

DpSolution exact_dp(const DpProblem& pb) {
  pb.check();
  const double states = pb.joint_states();
  if (states > kMaxDpStates) {
    throw OracleGuardError("DP state space too large: " + std::to_string(states) + " states",
                           states);
  }
  const int n = pb.num_sources;
  const int base = pb.aoi_cap * 4;
  const auto total = static_cast<std::size_t>(states);

  std::vector<std::uint32_t> masks;
  for (std::uint32_t a = 0; a < (1u << n); ++a) {
    if (std::popcount(a) <= pb.capacity) masks.push_back(a);
  }

  DpSolution sol;
  sol.num_sources = n;
  sol.aoi_cap = pb.aoi_cap;
  sol.policy.assign(static_cast<std::size_t>(pb.horizon), std::vector<std::uint32_t>(total, 0));

  std::vector<double> next_value(total, 0.0);
  std::vector<double> value(total, 0.0);
  std::vector<Lane> lanes(static_cast<std::size_t>(n));
  for (int t = pb.horizon - 1; t >= 0; --t) {
    const double price = pb.activation_cost(t);
    for (std::size_t code = 0; code < total; ++code) {
      std::size_t rest = code;
      double stale = 0.0;
      for (int i = 0; i < n; ++i) {
        lanes[static_cast<std::size_t>(i)] = lane_decode(static_cast<int>(rest % base));
        rest /= static_cast<std::size_t>(base);
        const double a = lanes[static_cast<std::size_t>(i)].aoi;
        stale += a * a;
      }
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t best_mask = 0;
      for (std::uint32_t a : masks) {
        std::size_t nxt = 0;
        std::size_t mult = 1;
        for (int i = 0; i < n; ++i) {
          const Lane l = lane_next(lanes[static_cast<std::size_t>(i)], (a >> i) & 1u, pb.aoi_cap);
          nxt += static_cast<std::size_t>(lane_code(l)) * mult;
          mult *= static_cast<std::size_t>(base);
        }
        const double v = stale + price * std::popcount(a) + next_value[nxt];
        if (v < best) {
          best = v;
          best_mask = a;
        }
      }
      value[code] = best;
      sol.policy[static_cast<std::size_t>(t)][code] = best_mask;
    }
    std::swap(value, next_value);
  }

  std::size_t start = 0;
  std::size_t mult = 1;
  for (int i = 0; i < n; ++i) {
    start += static_cast<std::size_t>(lane_code({pb.initial_aoi[static_cast<std::size_t>(i)], 0, 0})) * mult;
    mult *= static_cast<std::size_t>(base);
  }
  sol.optimal_cost = next_value[start];
  return sol;
}

StepParams dp_step_params(const DpProblem& pb) {
  StepParams p;
  p.tx_slots = 1;
  p.fwd_slots = 1;
  p.aoi_cap = pb.aoi_cap;
  p.capacity = pb.capacity;
  p.e_tot = pb.e_tot;
  p.stages = {pb.e_tot, 0.0, 0.0};
  p.attribution = EnergyAttribution::single;
  p.duty_per_tx = 0.0;
  p.gate = false;
  return p;
}

SystemState dp_initial_state(const DpProblem& pb) {
  SystemState s = initial_state(pb.num_sources, 1);
  for (int i = 0; i < pb.num_sources; ++i) {
    s.sources[static_cast<std::size_t>(i)].aoi = pb.initial_aoi[static_cast<std::size_t>(i)];
  }
  return s;
}

namespace {

IndexContext slot_context(const DpProblem& pb, int t) {
  return {pb.lambda, pb.mu, pb.xi[static_cast<std::size_t>(t)], pb.e_tot, pb.c_duty_frac};
}

struct Enumerator {
  const DpProblem& pb;
  StepParams params;
  std::vector<std::uint32_t> masks;
  double best = std::numeric_limits<double>::infinity();

  void run(const SystemState& state, int t, double acc) {
    if (t == pb.horizon) {
      best = std::min(best, acc);
      return;
    }
    const IndexContext ctx = slot_context(pb, t);
    for (std::uint32_t a : masks) {
      PolicyDecision d = PolicyDecision::none(pb.num_sources);
      for (int i = 0; i < pb.num_sources; ++i) {
        d.a_dev[static_cast<std::size_t>(i)] = (a >> i) & 1u;
      }
      apply_greedy_downstream(state, d);
      const double c = lagrangian_cost(state, d, ctx);
      StepOutcome o = step(state, d, ctx.xi_t, BudgetLedger{}, params);
      run(o.state, t + 1, acc + c);
    }
  }
};

}  // namespace

double brute_force_enumerate(const DpProblem& pb) {
  pb.check();
  Enumerator e{pb, dp_step_params(pb), {}};
  for (std::uint32_t a = 0; a < (1u << pb.num_sources); ++a) {
    if (std::popcount(a) <= pb.capacity) e.masks.push_back(a);
  }
  const double sequences = std::pow(static_cast<double>(e.masks.size()), pb.horizon);
  if (sequences > kMaxEnumeratedSequences) {
    throw OracleGuardError("too many action sequences: " + std::to_string(sequences), sequences);
  }
  e.run(dp_initial_state(pb), 0, 0.0);
  return e.best;
}

double rollout_cost(const DpProblem& pb, const DecideFn& decide) {
  pb.check();
  const StepParams params = dp_step_params(pb);
  SystemState state = dp_initial_state(pb);
  double total = 0.0;
  for (int t = 0; t < pb.horizon; ++t) {
    const IndexContext ctx = slot_context(pb, t);
    PolicyDecision d = PolicyDecision::none(pb.num_sources);
    d.a_dev = decide(state, t);
    apply_greedy_downstream(state, d);
    total += lagrangian_cost(state, d, ctx);
    state = step(state, d, ctx.xi_t, BudgetLedger{}, params).state;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Timestamp twin

ShadowPipeline::ShadowPipeline(int num_sources, int initial_aoi, int tx_slots, int fwd_slots,
                               int aoi_cap)
    : tx_(tx_slots), fwd_(fwd_slots), cap_(aoi_cap) {
  lanes_.assign(static_cast<std::size_t>(num_sources), Lane{-initial_aoi, {}, {}, {}, {}});
}

int ShadowPipeline::age_of(int gen) const { return std::min(now_ - gen, cap_); }

int ShadowPipeline::aoi(int n) const { return age_of(lanes_.at(static_cast<std::size_t>(n)).last_gen); }

int ShadowPipeline::gw_buffer_age(int n) const {
  const Packet& p = lanes_.at(static_cast<std::size_t>(n)).gw_buf;
  return p.gen == kNone ? 0 : age_of(p.gen);
}

int ShadowPipeline::sv_buffer_age(int n) const {
  const Packet& p = lanes_.at(static_cast<std::size_t>(n)).sv_buf;
  return p.gen == kNone ? 0 : age_of(p.gen);
}

bool ShadowPipeline::device_idle(int n) const {
  return lanes_.at(static_cast<std::size_t>(n)).uplink.gen == kNone;
}

bool ShadowPipeline::gateway_idle(int n) const {
  return lanes_.at(static_cast<std::size_t>(n)).forward.gen == kNone;
}

void ShadowPipeline::advance(const PolicyDecision& d) {
  delivered_.clear();
  const int t = now_;
  for (std::size_t n = 0; n < lanes_.size(); ++n) {
    Lane& l = lanes_[n];
    if (d.a_dev[n]) {
      l.uplink = {t, t + tx_};
    }
    if (d.a_gw[n] && l.gw_buf.gen != kNone) {
      l.forward = {l.gw_buf.gen, t + fwd_};
      l.gw_buf = {};
    }
    if (d.a_sv[n] && l.sv_buf.gen != kNone) {
      l.last_gen = l.sv_buf.gen;
      l.sv_buf = {};
      delivered_.emplace_back(static_cast<int>(n), std::min(t + 1 - l.last_gen, cap_));
    }
  }
  now_ = t + 1;
  for (Lane& l : lanes_) {
    if (l.uplink.gen != kNone && l.uplink.ready <= now_) {
      l.gw_buf = l.uplink;
      l.uplink = {};
    }
    if (l.forward.gen != kNone && l.forward.ready <= now_) {
      l.sv_buf = l.forward;
      l.forward = {};
    }
  }
}

}  // namespace saoithe
