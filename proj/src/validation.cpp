#include "saoithe/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "saoithe/whittle.hpp"

namespace saoithe {

bool ValidationReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

nlohmann::json ValidationReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) {
    arr.push_back({{"suite", c.suite}, {"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  }
  return {{"pass", pass()}, {"checks", arr}};
}

namespace {

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(unit(rng) * (hi - lo + 1));
}

std::string describe(const DpProblem& p) {
  std::ostringstream os;
  os << "N=" << p.num_sources << " T=" << p.horizon << " cap=" << p.aoi_cap
     << " M=" << p.capacity << " lambda=" << p.lambda;
  return os.str();
}

}  // namespace

ShadowCheck shadow_equivalence(long steps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ShadowCheck out;
  while (out.steps < steps) {
    const int n = uniform_int(rng, 1, 6);
    const int tx = uniform_int(rng, 1, 3);
    const int fwd = uniform_int(rng, 1, 3);
    const int cap = uniform_int(rng, 4, 60);
    const int init = uniform_int(rng, 1, cap);
    const int capacity = uniform_int(rng, 0, n);
    const double p_dev = unit(rng);
    const double p_down = 0.3 + 0.7 * unit(rng);

    StepParams params;
    params.tx_slots = tx;
    params.fwd_slots = fwd;
    params.aoi_cap = cap;
    params.capacity = capacity;
    params.gate = false;
    SystemState state = initial_state(n, init);
    ShadowPipeline shadow(n, init, tx, fwd, cap);

    for (int t = 0; t < 500 && out.steps < steps; ++t, ++out.steps) {
      PolicyDecision d = PolicyDecision::none(n);
      int used = 0;
      for (int i = 0; i < n; ++i) {
        const SourceState& s = state.sources[static_cast<std::size_t>(i)];
        if (!s.dev_busy && used < capacity && unit(rng) < p_dev) {
          d.a_dev[static_cast<std::size_t>(i)] = 1;
          ++used;
        }
        if (s.gw_buf_age > 0 && !s.gw_busy && unit(rng) < p_down) d.a_gw[static_cast<std::size_t>(i)] = 1;
        if (s.sv_buf_age > 0 && unit(rng) < p_down) d.a_sv[static_cast<std::size_t>(i)] = 1;
      }
      StepOutcome o = step(state, d, 100.0, BudgetLedger{}, params);
      shadow.advance(d);
      state = std::move(o.state);

      out.deliveries += o.metrics.deliveries;
      bool ok = static_cast<int>(shadow.last_deliveries().size()) == o.metrics.deliveries;
      for (const auto& [src, age] : shadow.last_deliveries()) {
        ok = ok && state.sources[static_cast<std::size_t>(src)].aoi == age;
      }
      for (int i = 0; i < n && ok; ++i) {
        const SourceState& s = state.sources[static_cast<std::size_t>(i)];
        ok = s.aoi == shadow.aoi(i) && s.gw_buf_age == shadow.gw_buffer_age(i) &&
             s.sv_buf_age == shadow.sv_buffer_age(i) && s.dev_busy == !shadow.device_idle(i) &&
             s.gw_busy == !shadow.gateway_idle(i);
      }
      if (!ok) {
        if (out.mismatches == 0) {
          std::ostringstream os;
          os << "step " << t << " (N=" << n << " tx=" << tx << " fwd=" << fwd << " cap=" << cap
             << ")";
          out.first_mismatch = os.str();
        }
        ++out.mismatches;
        break;  // the two pipelines have diverged; start a fresh run
      }
    }
  }
  return out;
}

DpProblem random_dp_problem(std::mt19937_64& rng, int min_t, int max_t, int max_sources) {
  DpProblem p;
  p.num_sources = uniform_int(rng, 1, std::clamp(max_sources, 1, 2));
  p.horizon = uniform_int(rng, min_t, max_t);
  p.aoi_cap = uniform_int(rng, 3, 8);
  p.capacity = uniform_int(rng, 1, p.num_sources);
  p.e_tot = 0.9251;
  p.c_duty_frac = 1.296 / 300.0;

  const bool constant = unit(rng) < 0.5;
  const double level = 50.0 + 400.0 * unit(rng);
  const double phase = 2.0 * 3.141592653589793 * unit(rng);
  for (int t = 0; t < p.horizon; ++t) {
    p.xi.push_back(constant ? level
                            : level * (1.0 + 0.5 * std::sin(phase + 2.0 * 3.141592653589793 * t / 12.0)));
  }
  // Target per-activation prices spread from free to a few times U(cap).
  const double target = std::pow(10.0, -1.0 + 3.5 * unit(rng));
  p.lambda = target / carbon_cost(level, p.e_tot);
  p.mu = unit(rng) < 0.3 ? 0.0 : 0.1 * target / p.c_duty_frac * unit(rng);
  for (int i = 0; i < p.num_sources; ++i) p.initial_aoi.push_back(uniform_int(rng, 1, p.aoi_cap));
  return p;
}

double saoithe_rollout_cost(const DpProblem& problem, const SaoitheOptions& opts) {
  return rollout_cost(problem, [&](const SystemState& s, int t) {
    const IndexContext ctx{problem.lambda, problem.mu, problem.xi[static_cast<std::size_t>(t)],
                           problem.e_tot, problem.c_duty_frac};
    return saoithe_decide(s, ctx, problem.capacity, opts).a_dev;
  });
}

OracleComparison compare_with_oracle(const DpProblem& problem, const SaoitheOptions& opts) {
  OracleComparison c;
  c.problem = problem;
  c.dp_cost = exact_dp(problem).optimal_cost;
  c.saoithe_cost = saoithe_rollout_cost(problem, opts);
  try {
    c.brute_cost = brute_force_enumerate(problem);
  } catch (const OracleGuardError&) {
  }
  return c;
}

namespace {

void add(ValidationReport& rep, const char* suite, const char* name, bool pass,
         const std::string& detail) {
  rep.checks.push_back({suite, name, pass, detail});
}

void whittle_suite(ValidationReport& rep) {
  {
    long bad = 0;
    for (int k = 0; k < 20; ++k) {
      const std::int64_t c6 = 6 * (k * k * 37 + k);
      for (std::int64_t a = 1; a <= 10000; ++a) {
        if (whittle_index_times6(a, c6) != index_from_indifference_times6(a, c6)) ++bad;
      }
    }
    add(rep, "whittle", "index equals indifference subsidy", bad == 0,
        std::to_string(bad) + " mismatches over 2e5 points");
  }
  {
    double worst = 0.0;
    for (double c : {0.0, 1.0, 10.0, 100.0, 1000.0}) {
      worst = std::max(worst, std::abs(whittle_index(1000, c) / 1e9 - 2.0 / 3.0));
    }
    add(rep, "whittle", "cubic asymptote", worst < 2e-3, "max deviation " + std::to_string(worst));
  }
  {
    bool ok = true;
    for (double c : {0.0, 0.5, 3.0, 13.0, 100.0, 1e4, 1e6}) {
      const auto h = critical_age(c);
      ok = ok && whittle_index(h, c) > 0.0 && (h == 1 || whittle_index(h - 1, c) <= 0.0);
      for (std::int64_t a = h; a < h + 200; ++a) ok = ok && whittle_index(a, c) > 0.0;
    }
    add(rep, "whittle", "critical age is the sign change", ok, "");
  }
  {
    std::vector<double> grid;
    const double top = static_cast<double>(urgency_exact(200));
    for (int i = 0; i <= 2000; ++i) grid.push_back(top * i / 2000.0);
    bool ok = true;
    std::string detail;
    for (double c : {0.0, 1.0, 10.0, 100.0, 1000.0}) {
      const IndexabilityReport r = indexability_check(c, 400, grid);
      if (!r.pass) {
        ok = false;
        detail = "cost " + std::to_string(c) + ": " + r.violation_kind;
      }
    }
    add(rep, "whittle", "indexability", ok, ok ? "5 costs x 2001 subsidies" : detail);
  }
}

void oracle_suite(ValidationReport& rep, std::uint64_t seed) {
  {
    bool ok = true;
    for (std::int64_t h = 1; h <= 3000; ++h) ok = ok && cycle_cost(h) == cycle_cost_by_summation(h);
    add(rep, "oracle", "cycle cost closed form", ok, "H in [1, 3000]");
  }
  std::mt19937_64 rng(seed);
  {
    long bad = 0;
    std::string detail;
    for (int i = 0; i < 25; ++i) {
      DpProblem p = random_dp_problem(rng, 1, 8, i < 15 ? 1 : 2);
      if (p.num_sources == 2) p.horizon = std::min(p.horizon, 6), p.xi.resize(static_cast<std::size_t>(p.horizon));
      const double dp = exact_dp(p).optimal_cost;
      const double bf = brute_force_enumerate(p);
      if (std::abs(dp - bf) > 1e-9 * std::max(1.0, std::abs(bf))) {
        if (bad++ == 0) detail = describe(p);
      }
    }
    add(rep, "oracle", "dp equals enumeration", bad == 0,
        bad == 0 ? "25 instances" : std::to_string(bad) + " mismatches, first " + detail);
  }
  {
    long below = 0;
    std::vector<double> gaps;
    for (int i = 0; i < 30; ++i) {
      const OracleComparison c = compare_with_oracle(random_dp_problem(rng, 4, 20));
      if (c.saoithe_cost < c.dp_cost * (1.0 - 1e-12) - 1e-9) ++below;
      gaps.push_back(c.gap());
    }
    std::sort(gaps.begin(), gaps.end());
    add(rep, "oracle", "dp bounds the scheduler", below == 0,
        "median gap " + std::to_string(100.0 * gaps[gaps.size() / 2]) + "%, max " +
            std::to_string(100.0 * gaps.back()) + "%");
  }
}

void dynamics_suite(ValidationReport& rep, std::uint64_t seed) {
  {
    const ShadowCheck s = shadow_equivalence(20000, seed);
    add(rep, "dynamics", "timestamp pipeline agrees", s.mismatches == 0,
        std::to_string(s.steps) + " steps, " + std::to_string(s.deliveries) + " deliveries" +
            (s.mismatches ? ", first mismatch at " + s.first_mismatch : ""));
  }
  {
    std::mt19937_64 rng(seed + 1);
    long violations = 0;
    double worst = -1.0;
    for (int run = 0; run < 20; ++run) {
      StepParams p;
      p.capacity = 4;
      p.duty_per_tx = 1e-3;
      p.gate = true;
      BudgetLedger ledger{0.0, 0.0, 1e-4 * (1 + run), 0.02};
      SystemState s = initial_state(10, 1);
      for (int t = 0; t < 200; ++t) {
        PolicyDecision d = PolicyDecision::none(10);
        int used = 0;
        for (int i = 0; i < 10; ++i) {
          if (!s.sources[static_cast<std::size_t>(i)].dev_busy && used < 4 && unit(rng) < 0.5) {
            d.a_dev[static_cast<std::size_t>(i)] = 1;
            ++used;
          }
        }
        apply_greedy_downstream(s, d);
        StepOutcome o = step(s, d, 50.0 + 400.0 * unit(rng), ledger, p);
        s = o.state;
        ledger = o.ledger;
        const double over = std::max(ledger.cf_spent / ledger.cf_budget,
                                     ledger.duty_spent / ledger.duty_budget) - 1.0;
        worst = std::max(worst, over);
        // Same round-off allowance as the gate itself.
        if (over > 1e-12) ++violations;
      }
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", worst);
    add(rep, "dynamics", "budget gate holds every prefix", violations == 0,
        std::to_string(violations) + " violating slots, largest relative overrun " + buf);
  }
}

}  // namespace

ValidationReport run_validation(const std::string& suite, std::uint64_t seed) {
  if (suite != "whittle" && suite != "oracle" && suite != "dynamics" && suite != "all") {
    throw std::invalid_argument("unknown suite '" + suite + "' (expected whittle|oracle|dynamics|all)");
  }
  ValidationReport rep;
  if (suite == "whittle" || suite == "all") whittle_suite(rep);
  if (suite == "oracle" || suite == "all") oracle_suite(rep, seed);
  if (suite == "dynamics" || suite == "all") dynamics_suite(rep, seed);
  return rep;
}

}  // namespace saoithe
