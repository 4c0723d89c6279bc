#pragma once

#include <vector>

#include "saoithe/core_model.hpp"
#include "saoithe/episode.hpp"
#include "saoithe/policies.hpp"
#include "saoithe/traces.hpp"

#include "json.hpp"

namespace saoithe {

/// One iterate of projected dual ascent.
struct DualState {
  double lambda = 0.0;
  double mu = 0.0;
  double step_size = 0.0;
  int iteration = 0;
  double residual_cf = 0.0;    // gCO2eq over (positive) or under the budget
  double residual_duty = 0.0;  // fraction of horizon
};

struct DualResiduals {
  double cf = 0.0;
  double duty = 0.0;
};

/// (J_C - kappa, J_D - D) of a finished episode.
DualResiduals dual_residuals(const EpisodeResult& result);

struct CalibrationOptions {
  double tolerance = 0.01;  // fraction of each budget
  int max_iters = 200;
  SaoitheOptions policy;
  /// Multiplies the initial step, which is otherwise scaled to the starting
  /// multiplier.
  double step_scale = 1.0;
};

struct CalibrationReport {
  double lambda_star = 0.0;
  double mu_star = 0.0;
  int iterations = 0;
  bool converged = false;
  /// The prices closed in on a jump in the spend that straddles the
  /// tolerance band, so no price meets it; the best iterate is returned.
  bool pinned = false;
  double lambda_initial = 0.0;
  double cf_budget = 0.0;
  double duty_budget = 0.0;
  DualResiduals residuals;  // at the returned multipliers
  std::vector<DualState> trace;

  nlohmann::json to_json() const;
};

/// Ungated SAOITHE episode at fixed multipliers.
EpisodeResult run_saoithe(const ValidatedConfig& cfg, const CarbonTrace& trace, double lambda,
                          double mu, const SaoitheOptions& opts = {}, bool gate = false);

/// Starting carbon price from the renewal-rate view: the budget buys K
/// updates at the mean intensity, i.e. one every N T / K slots per source,
/// and the price is set so that this is the critical age. Zero when the
/// budget buys an update every slot.
double initial_lambda(const ValidatedConfig& cfg, const CarbonTrace& trace);
/// Same for the duty budget.
double initial_mu(const ValidatedConfig& cfg);

/// Projected dual ascent on (lambda, mu) with steps alpha0 / sqrt(k) on
/// residuals normalised by their budgets. Stops once both constraints are
/// within tolerance (a zero multiplier only needs its constraint slack) and
/// otherwise returns the best iterate seen, flagged as not converged.
/// Throws std::invalid_argument for a trace that does not cover the horizon.
CalibrationReport calibrate(const ValidatedConfig& cfg, const CarbonTrace& trace,
                            const CalibrationOptions& opts = {});

}  // namespace saoithe
