#include "saoithe/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "saoithe/whittle.hpp"

namespace saoithe {

DualResiduals dual_residuals(const EpisodeResult& result) {
  return {result.total_cf - result.cf_budget, result.total_duty - result.duty_budget};
}

nlohmann::json CalibrationReport::to_json() const {
  nlohmann::json iters = nlohmann::json::array();
  for (const DualState& s : trace) {
    iters.push_back({{"iteration", s.iteration},
                     {"lambda", s.lambda},
                     {"mu", s.mu},
                     {"step_size", s.step_size},
                     {"residual_cf", s.residual_cf},
                     {"residual_duty", s.residual_duty}});
  }
  return {{"lambda_star", lambda_star},
          {"mu_star", mu_star},
          {"iterations", iterations},
          {"converged", converged},
          {"pinned", pinned},
          {"lambda_initial", lambda_initial},
          {"cf_budget", cf_budget},
          {"duty_budget", duty_budget},
          {"residual_cf", residuals.cf},
          {"residual_duty", residuals.duty},
          {"trace", iters}};
}

EpisodeResult run_saoithe(const ValidatedConfig& cfg, const CarbonTrace& trace, double lambda,
                          double mu, const SaoitheOptions& opts, bool gate) {
  SaoithePolicy policy(lambda, mu, cfg.e_tot(), cfg.c_duty_frac(), cfg.capacity(), opts);
  return run_episode(cfg, trace, policy, gate);
}

namespace {

// Price that puts the critical age at `cycle` slots.
double price_for_cycle(double cycle) {
  const double h = std::max(1.0, std::floor(cycle));
  if (h <= 1.0) return 0.0;
  return urgency(static_cast<std::int64_t>(h) - 1);
}

double mean_over_horizon(const CarbonTrace& trace, int horizon) {
  double s = 0.0;
  for (int t = 0; t < horizon; ++t) s += trace.xi[static_cast<std::size_t>(t)];
  return s / horizon;
}

// Violation of one constraint relative to its budget; a positive multiplier
// also counts slack as a miss (complementary slackness).
double miss(double residual, double budget, double multiplier) {
  const double scale = budget > 0.0 ? budget : 1.0;
  const double r = residual / scale;
  return multiplier > 0.0 ? std::abs(r) : std::max(0.0, r);
}

}  // namespace

double initial_lambda(const ValidatedConfig& cfg, const CarbonTrace& trace) {
  if (trace.size() < cfg.horizon()) {
    throw std::invalid_argument("trace does not cover the horizon");
  }
  const double mean_xi = mean_over_horizon(trace, cfg.horizon());
  const double per_update = carbon_cost(mean_xi, cfg.e_tot());
  if (!(per_update > 0.0)) return 0.0;
  const double updates = cfg.kappa_grams() / per_update;
  const double demand = static_cast<double>(cfg.num_sources()) * cfg.horizon();
  if (updates >= demand) return 0.0;
  const double cycle = updates > 0.0 ? demand / updates : static_cast<double>(cfg.aoi_cap());
  return price_for_cycle(std::min(cycle, static_cast<double>(cfg.aoi_cap()))) / per_update;
}

double initial_mu(const ValidatedConfig& cfg) {
  if (!(cfg.c_duty_frac() > 0.0)) return 0.0;
  const double updates = cfg.raw().duty_budget / cfg.duty_per_tx();
  const double demand = static_cast<double>(cfg.num_sources()) * cfg.horizon();
  if (updates >= demand) return 0.0;
  const double cycle = updates > 0.0 ? demand / updates : static_cast<double>(cfg.aoi_cap());
  return price_for_cycle(std::min(cycle, static_cast<double>(cfg.aoi_cap()))) / cfg.c_duty_frac();
}

CalibrationReport calibrate(const ValidatedConfig& cfg, const CarbonTrace& trace,
                            const CalibrationOptions& opts) {
  if (trace.size() < cfg.horizon()) {
    throw std::invalid_argument("trace does not cover the horizon");
  }
  if (!(opts.tolerance > 0.0) || opts.max_iters < 1 || !(opts.step_scale > 0.0)) {
    throw std::invalid_argument("calibration needs a positive tolerance, step scale and iteration cap");
  }
  for (int t = 0; t < cfg.horizon(); ++t) {
    if (!(trace.xi[static_cast<std::size_t>(t)] >= 0.0)) {
      throw std::invalid_argument("trace holds a negative or missing intensity");
    }
  }

  CalibrationReport rep;
  rep.cf_budget = cfg.kappa_grams();
  rep.duty_budget = cfg.raw().duty_budget;
  const double cf_scale = rep.cf_budget > 0.0 ? rep.cf_budget : 1.0;
  const double duty_scale = rep.duty_budget > 0.0 ? rep.duty_budget : 1.0;

  // Step sizes follow the magnitude of the prices that would make each
  // budget bind on its own.
  const double lambda_ref = initial_lambda(cfg, trace);
  const double mu_ref = initial_mu(cfg);
  const double alpha_lambda =
      opts.step_scale * (lambda_ref > 0.0 ? lambda_ref : 1.0 / carbon_cost(1.0, cfg.e_tot()));
  const double alpha_mu =
      opts.step_scale * (mu_ref > 0.0 ? mu_ref : 1.0 / std::max(cfg.c_duty_frac(), 1e-12));

  // Iterates over budget rank behind those within it; among the latter the
  // smallest miss wins.
  double best_score = INFINITY;
  auto score_of = [&](const DualResiduals& res, double lambda, double mu) {
    const double over = std::max(res.cf / cf_scale, res.duty / duty_scale);
    if (over > opts.tolerance) return 1.0 + over;
    return std::max(miss(res.cf, rep.cf_budget, lambda), miss(res.duty, rep.duty_budget, mu));
  };
  auto evaluate = [&](double lambda, double mu, double step, int k) {
    const EpisodeResult ep = run_saoithe(cfg, trace, lambda, mu, opts.policy, false);
    const DualResiduals res = dual_residuals(ep);
    rep.trace.push_back({lambda, mu, step, k, res.cf, res.duty});
    const double score = score_of(res, lambda, mu);
    if (score < best_score) {
      best_score = score;
      rep.lambda_star = lambda;
      rep.mu_star = mu;
      rep.residuals = res;
    }
    return std::pair{res, score <= opts.tolerance};
  };

  // Slack budgets carry a zero price.
  rep.iterations = 1;
  if (evaluate(0.0, 0.0, 0.0, 0).second) {
    rep.converged = true;
    return rep;
  }

  // Spend is monotone in each price, so every iterate narrows the interval
  // that must hold the answer. A step that leaves the interval is replaced
  // by its midpoint, which keeps the large normalised overspends seen at
  // low prices from throwing the ascent back and forth. So is a step that
  // crawls, covering under a tenth of the way to the far end, since the
  // decaying step can otherwise stall on a small residual.
  struct Bracket {
    double lo = 0.0;       // largest price seen overspending
    double hi = INFINITY;  // smallest price seen underspending
    bool zero_over = false;  // a zero price has been seen overspending
    double midpoint() const {
      // Until zero is known to overspend it is the natural lower probe.
      if (lo == 0.0) return zero_over ? 0.5 * hi : 0.0;
      return std::sqrt(lo * hi);
    }
    double project(double from, double x) const {
      const bool up = x > from;
      if (x > lo && x < hi) {
        // With no upper end yet the reach is the price itself.
        const double reach = up ? (std::isfinite(hi) ? hi : 2.0 * from) - from : from - lo;
        if (std::abs(x - from) >= 0.1 * reach) return x;
      }
      if (!std::isfinite(hi)) return std::max(x, 2.0 * lo);
      return midpoint();
    }
    void update(double price, double residual) {
      if (residual > 0.0) lo = std::max(lo, price);
      if (residual > 0.0 && price == 0.0) zero_over = true;
      if (residual < 0.0 && price > 0.0) hi = std::min(hi, price);
    }
  };
  Bracket lb, mb;
  lb.update(0.0, rep.trace.back().residual_cf);

  double lambda = lambda_ref;
  double mu = rep.trace.back().residual_duty > 0.0 ? mu_ref : 0.0;
  rep.lambda_initial = lambda;
  for (int k = 1; k <= opts.max_iters; ++k) {
    const double decay = 1.0 / std::sqrt(static_cast<double>(k));
    const auto [res, ok] = evaluate(lambda, mu, decay, k);
    rep.iterations = k + 1;
    if (ok) {
      rep.converged = true;
      rep.lambda_star = lambda;
      rep.mu_star = mu;
      rep.residuals = res;
      return rep;
    }
    lb.update(lambda, res.cf);
    if (mu > 0.0 || res.duty > 0.0) mb.update(mu, res.duty);
    // A price is settled once its bracket has closed on a jump in the spend,
    // or while it sits at zero with its budget slack.
    auto settled = [](const Bracket& b, double price, double residual) {
      if (price == 0.0 && residual <= 0.0) return true;
      return std::isfinite(b.hi) && b.hi - b.lo <= 1e-12 * b.hi;
    };
    if (settled(lb, lambda, res.cf) && settled(mb, mu, res.duty)) {
      rep.pinned = true;
      break;
    }
    const double next_lambda = lambda + alpha_lambda * decay * res.cf / cf_scale;
    const double next_mu = mu + alpha_mu * decay * res.duty / duty_scale;
    lambda = res.cf == 0.0 ? lambda : lb.project(lambda, std::max(0.0, next_lambda));
    if (res.duty <= 0.0 && mu == 0.0) {
      mu = 0.0;
    } else if (mu == 0.0 && mu_ref > 0.0) {
      mu = mb.project(mu, mu_ref);
    } else {
      mu = mb.project(mu, std::max(0.0, next_mu));
    }
  }
  return rep;
}

}  // namespace saoithe
