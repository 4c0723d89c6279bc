#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "saoithe/calibration.hpp"
#include "saoithe/core_model.hpp"
#include "saoithe/episode.hpp"
#include "saoithe/whittle.hpp"

#include "json.hpp"

namespace saoithe {

// ---- episode output -------------------------------------------------------

/// Scalar digest of an episode; what the JSON summary holds.
struct EpisodeSummary {
  std::string policy;
  std::string region;
  int num_sources = 0;
  int horizon = 0;
  double slot_duration = 0.0;
  bool gate = true;
  double avg_aoi_slots = 0.0;
  double avg_aoi_minutes = 0.0;
  double total_cf = 0.0;
  double total_duty = 0.0;
  double total_energy = 0.0;
  double idle_cf = 0.0;
  int total_activations = 0;
  int total_deliveries = 0;
  int total_blocked = 0;
  double cf_budget = 0.0;
  double duty_budget = 0.0;
  std::optional<int> budget_exhausted_at;
  int prefix_violations = 0;
  std::uint64_t seed = 0;
  std::string config_digest;
  nlohmann::json policy_metadata;

  bool operator==(const EpisodeSummary&) const = default;
};

EpisodeSummary summarize(const EpisodeResult& r);
nlohmann::json to_json(const EpisodeSummary& s);
EpisodeSummary summary_from_json(const nlohmann::json& j);

enum class OutputFormat { csv, json };

/// Long per-slot table: slot,source,aoi,cf_cum,duty_cum (T * N rows).
std::string episode_csv(const EpisodeResult& r);
/// Pretty-printed summary with sorted keys.
std::string episode_summary_json(const EpisodeResult& r);

/// Writes `r` in the given format. Throws std::runtime_error on I/O failure.
void emit(const EpisodeResult& r, OutputFormat format, const std::filesystem::path& path);
EpisodeSummary load_summary(const std::filesystem::path& path);

/// `{policy}_{region}_N{N}_kappa{kappa}` without extension.
std::string output_stem(const std::string& policy, const std::string& region, int num_sources,
                        double kappa_units);

/// Writes `text` to `path`, throwing std::runtime_error on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

// ---- sweeps ---------------------------------------------------------------

struct SweepSpec {
  SimConfig base = default_config();
  std::vector<int> num_sources{50};
  std::vector<double> kappa_units{21.5};
  std::vector<std::string> regions{"low", "medium", "high"};
  std::vector<std::string> policies{"saoithe", "round_robin", "random"};
  int replications = 30;      // Random policy seeds
  std::uint64_t seed = 1;     // trace seed and start of the Random seed ladder
  bool gate = true;
  CalibrationOptions calibration;
  int jobs = 0;               // 0 = hardware concurrency
};

/// Reads a sweep spec document. Recognised keys: config (object of flat
/// config keys), config_file, num_sources, kappa, regions, policies,
/// replications, seed, gate, tolerance, max_iters, forwarding, jobs.
SweepSpec sweep_spec_from_json(const nlohmann::json& j,
                               const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const SweepSpec& spec);

struct CellSummary {
  std::string policy;
  std::string region;
  int num_sources = 0;
  double kappa_units = 0.0;
  double kappa_grams = 0.0;

  bool failed = false;
  std::string error;

  int replications = 0;
  double avg_aoi_slots = 0.0;  // mean over replications
  double avg_aoi_minutes = 0.0;
  double half_width_slots = 0.0;  // 95% confidence half-width, 0 when unreplicated
  double total_cf = 0.0;
  double total_duty = 0.0;
  int prefix_violations = 0;  // summed over replications
  std::optional<int> budget_exhausted_at;  // first replication
  int rr_period = 0;
  double lambda = 0.0;
  double mu = 0.0;
  bool calibration_converged = false;
  bool calibration_pinned = false;
  std::vector<std::uint64_t> seeds;
};

nlohmann::json to_json(const CellSummary& c);

struct SweepResult {
  SweepSpec spec;
  std::vector<CellSummary> cells;  // policies x regions x N x kappa, in that nesting
  std::string digest;

  nlohmann::json to_json() const;
  const CellSummary* find(const std::string& policy, const std::string& region, int num_sources,
                          double kappa_units) const;
};

/// Called once per finished cell with the cell summary and its first
/// episode. Calls are serialised.
using CellSink = std::function<void(const CellSummary&, const EpisodeResult&)>;

/// Runs every cell of the grid, concurrently up to spec.jobs. SAOITHE cells
/// calibrate first; Random is replicated; a failing cell is recorded and the
/// sweep carries on.
SweepResult sweep(const SweepSpec& spec, const CellSink& sink = {});

/// Builds a policy by name: saoithe | round_robin | random. SAOITHE takes
/// the given multipliers; the baselines derive their period from the
/// budget and trace.
std::unique_ptr<Policy> make_policy(const std::string& name, const ValidatedConfig& cfg,
                                    const CarbonTrace& trace, double lambda, double mu,
                                    std::uint64_t seed, const SaoitheOptions& opts = {});

/// Two-sided 95% Student-t quantile for `dof` degrees of freedom.
double t_quantile_95(int dof);

// ---- decision boundary ----------------------------------------------------

struct BoundaryRow {
  double xi = 0.0;
  double cost = 0.0;
  std::int64_t critical_age = 1;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = slope * x + intercept.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

struct BoundaryTable {
  std::vector<BoundaryRow> rows;
  double lambda = 0.0;
  /// Log-log slope of critical age against cost over rows with
  /// cost >= fit_min_cost; NaN with fewer than two such rows.
  double fitted_exponent = 0.0;
  double fit_min_cost = 0.0;
  std::size_t fit_points = 0;

  std::string to_csv() const;
};

/// Evenly spaced grid including both ends.
std::vector<double> linspace(double lo, double hi, int steps);

/// Critical age over an increasing intensity grid at carbon price
/// `lambda_star`; the remaining prices come from `ctx_base`.
BoundaryTable boundary_table(std::span<const double> xi_grid, const IndexContext& ctx_base,
                             double lambda_star, double fit_min_cost = 100.0);

}  // namespace saoithe
