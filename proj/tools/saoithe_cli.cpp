// saoithe: carbon-aware AoI scheduling simulator.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "saoithe/calibration.hpp"
#include "saoithe/config_io.hpp"
#include "saoithe/core_model.hpp"
#include "saoithe/episode.hpp"
#include "saoithe/policies.hpp"
#include "saoithe/reporting.hpp"
#include "saoithe/traces.hpp"
#include "saoithe/validation.hpp"

namespace fs = std::filesystem;
using namespace saoithe;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

std::string default_out_dir() {
  const char* env = std::getenv("SAOITHE_OUT_DIR");
  return (env != nullptr && *env != '\0') ? env : ".";
}

struct TraceArgs {
  std::string trace_file;
  std::string region;
  std::string trace_start;
  std::uint64_t trace_seed = 1;
};

void add_trace_options(CLI::App* cmd, TraceArgs& t) {
  auto* file = cmd->add_option("--trace", t.trace_file, "carbon-intensity CSV (timestamp,value)")
                   ->check(CLI::ExistingFile);
  auto* region = cmd->add_option("--region", t.region, "synthetic regional trace")
                     ->check(CLI::IsMember({"low", "medium", "high"}));
  file->excludes(region);
  region->excludes(file);
  cmd->add_option("--trace-start", t.trace_start,
                  "first slot start for --trace (epoch seconds or ISO-8601); default: first sample");
  cmd->add_option("--trace-seed", t.trace_seed, "noise seed for --region")->capture_default_str();
}

CarbonTrace load_trace(const TraceArgs& t, const ValidatedConfig& cfg) {
  if (!t.region.empty()) {
    return synthetic_trace(region_from_string(t.region), cfg.horizon(), cfg.raw().slot_duration,
                           t.trace_seed);
  }
  if (t.trace_file.empty()) {
    throw CLI::RequiredError("--trace or --region");
  }
  const RawCiSeries series = load_ci_csv(t.trace_file);
  const std::int64_t start =
      t.trace_start.empty() ? series.timestamps.front() : parse_timestamp(t.trace_start);
  CarbonTrace trace = resample_to_slots(series, cfg.raw().slot_duration, cfg.horizon(), start);
  trace.region_label = fs::path(t.trace_file).stem().string();
  return trace;
}

nlohmann::json trace_source(const TraceArgs& t) {
  if (!t.region.empty()) return {{"region", t.region}, {"seed", t.trace_seed}};
  return {{"file", t.trace_file}, {"start", t.trace_start}};
}

ValidatedConfig load_validated(const std::string& path) {
  return validate_config(load_config(path));
}

struct PolicyArgs {
  std::string forwarding = "greedy";
  std::string outstanding = "effective_age";

  SaoitheOptions options() const {
    return {forwarding_mode_from_string(forwarding), outstanding_rule_from_string(outstanding)};
  }
};

void add_policy_options(CLI::App* cmd, PolicyArgs& p) {
  cmd->add_option("--forwarding", p.forwarding, "gateway forwarding mode")
      ->check(CLI::IsMember({"greedy", "index_gated"}))
      ->capture_default_str();
  cmd->add_option("--outstanding", p.outstanding, "ranking of sources with an update in flight")
      ->check(CLI::IsMember({"effective_age", "skip", "literal"}))
      ->capture_default_str();
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  TraceArgs trace;
  std::string policy = "saoithe";
  std::optional<double> lambda;
  std::optional<double> mu;
  bool no_gate = false;
  std::string out = default_out_dir();
  std::uint64_t seed = 1;
  double tol = 0.01;
  int max_iters = 200;
  PolicyArgs pol;
};

int run_simulate(const SimulateArgs& a) {
  const ValidatedConfig cfg = load_validated(a.config);
  const CarbonTrace trace = load_trace(a.trace, cfg);
  const SaoitheOptions opts = a.pol.options();

  nlohmann::json run = {{"command", "simulate"},
                        {"policy", a.policy},
                        {"gate", !a.no_gate},
                        {"seed", a.seed},
                        {"config_seed", cfg.raw().rng_seed},
                        {"trace", trace_source(a.trace)}};
  double lambda = a.lambda.value_or(0.0);
  double mu = a.mu.value_or(0.0);
  if (a.policy == "saoithe" && !a.lambda) {
    CalibrationOptions copts;
    copts.tolerance = a.tol;
    copts.max_iters = a.max_iters;
    copts.policy = opts;
    const CalibrationReport rep = calibrate(cfg, trace, copts);
    lambda = rep.lambda_star;
    if (!a.mu) mu = rep.mu_star;
    run["calibration"] = rep.to_json();
    run["calibration"].erase("trace");
  }

  auto policy = make_policy(a.policy, cfg, trace, lambda, mu, a.seed, opts);
  const EpisodeResult r = run_episode(cfg, trace, *policy, !a.no_gate, a.seed);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  const std::string stem = output_stem(a.policy, trace.region_label, cfg.num_sources(),
                                       cfg.raw().cf_budget);
  emit(r, OutputFormat::csv, dir / (stem + ".csv"));
  emit(r, OutputFormat::json, dir / (stem + ".json"));
  save_config(cfg.raw(), dir / (stem + ".config"));
  write_trace_csv(trace, dir / (stem + ".trace.csv"));
  run["policy_metadata"] = r.policy_metadata;
  write_text_file(dir / (stem + ".run.json"), run.dump(2) + "\n");

  std::cout << a.policy << " " << trace.region_label << ": avg AoI " << r.avg_aoi_slots
            << " slots (" << r.avg_aoi_minutes << " min), CF " << r.total_cf << " / "
            << r.cf_budget << " g, duty " << r.total_duty << " / " << r.duty_budget
            << ", blocked " << r.total_blocked << "\n"
            << "wrote " << (dir / stem).string() << ".{csv,json,config,trace.csv,run.json}\n";
  return kOk;
}

// ---- calibrate --------------------------------------------------------------

struct CalibrateArgs {
  std::string config;
  TraceArgs trace;
  double tol = 0.01;
  int max_iters = 200;
  std::string out;
  PolicyArgs pol;
};

int run_calibrate(const CalibrateArgs& a) {
  const ValidatedConfig cfg = load_validated(a.config);
  const CarbonTrace trace = load_trace(a.trace, cfg);
  CalibrationOptions copts;
  copts.tolerance = a.tol;
  copts.max_iters = a.max_iters;
  copts.policy = a.pol.options();
  const CalibrationReport rep = calibrate(cfg, trace, copts);

  std::cout << "lambda* = " << rep.lambda_star << "\nmu* = " << rep.mu_star
            << "\niterations = " << rep.iterations
            << "\nconverged = " << (rep.converged ? "yes" : "no")
            << "\npinned = " << (rep.pinned ? "yes" : "no")
            << "\nresidual_cf = " << rep.residuals.cf << " g (budget " << rep.cf_budget
            << ")\nresidual_duty = " << rep.residuals.duty << " (budget " << rep.duty_budget
            << ")\n";
  if (rep.pinned) {
    std::cerr << "note: the spend jumps across the tolerance band at this price; reporting the "
                 "best iterate\n";
  } else if (!rep.converged) {
    std::cerr << "warning: no iterate met the tolerance; reporting the best one\n";
  }
  if (!a.out.empty()) {
    const fs::path dir(a.out);
    fs::create_directories(dir);
    const std::string stem = "calibration_" + trace.region_label;
    nlohmann::json j = rep.to_json();
    j["trace_source"] = trace_source(a.trace);
    j["config_seed"] = cfg.raw().rng_seed;
    write_text_file(dir / (stem + ".json"), j.dump(2) + "\n");
    save_config(cfg.raw(), dir / (stem + ".config"));
  }
  return kOk;
}

// ---- sweep ------------------------------------------------------------------

struct SweepArgs {
  std::string spec;
  std::string out = default_out_dir();
  std::optional<int> jobs;
};

int run_sweep(const SweepArgs& a) {
  std::ifstream in(a.spec);
  if (!in) throw std::runtime_error("cannot read " + a.spec);
  SweepSpec spec = sweep_spec_from_json(nlohmann::json::parse(in), fs::path(a.spec).parent_path());
  if (a.jobs) spec.jobs = *a.jobs;

  const fs::path dir(a.out);
  fs::create_directories(dir);
  save_config(spec.base, dir / "sweep.config");

  const SweepResult res = sweep(spec, [&](const CellSummary& c, const EpisodeResult& r) {
    const std::string stem = output_stem(c.policy, c.region, c.num_sources, c.kappa_units);
    if (c.failed) {
      std::cerr << stem << ": failed: " << c.error << "\n";
      return;
    }
    emit(r, OutputFormat::csv, dir / (stem + ".csv"));
    emit(r, OutputFormat::json, dir / (stem + ".json"));
    std::cout << stem << ": avg AoI " << c.avg_aoi_slots << " slots";
    if (c.replications > 1) std::cout << " +/- " << c.half_width_slots;
    std::cout << "\n";
  });
  write_text_file(dir / "sweep.json", res.to_json().dump(2) + "\n");

  int failed = 0;
  for (const auto& c : res.cells) failed += c.failed ? 1 : 0;
  std::cout << res.cells.size() << " cells, " << failed << " failed, digest " << res.digest
            << "\n";
  return failed == 0 ? kOk : kFailed;
}

// ---- boundary ---------------------------------------------------------------

struct BoundaryArgs {
  double xi_min = 50.0;
  double xi_max = 450.0;
  int steps = 81;
  double lambda = 1e8;
  double mu = 0.0;
  double c_duty_frac = 0.0;
  double e_tot = 0.9251;
  double fit_min_cost = 100.0;
  std::string out;
};

int run_boundary(const BoundaryArgs& a) {
  const auto grid = linspace(a.xi_min, a.xi_max, a.steps);
  IndexContext ctx;
  ctx.mu = a.mu;
  ctx.e_tot = a.e_tot;
  ctx.c_duty_frac = a.c_duty_frac;
  const BoundaryTable table = boundary_table(grid, ctx, a.lambda, a.fit_min_cost);
  if (a.out.empty()) {
    std::cout << table.to_csv();
  } else {
    const fs::path p(a.out);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    write_text_file(p, table.to_csv());
  }
  std::cerr << "log-log slope " << table.fitted_exponent << " over " << table.fit_points
            << " points with cost >= " << table.fit_min_cost << "\n";
  return kOk;
}

// ---- validate ---------------------------------------------------------------

struct ValidateArgs {
  std::string suite = "all";
  std::uint64_t seed = 1;
  bool json = false;
};

int run_validate(const ValidateArgs& a) {
  const ValidationReport rep = run_validation(a.suite, a.seed);
  if (a.json) {
    std::cout << rep.to_json().dump(2) << "\n";
  } else {
    for (const auto& c : rep.checks) {
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.suite << "/" << c.name;
      if (!c.detail.empty()) std::cout << "  " << c.detail;
      std::cout << "\n";
    }
    std::cout << (rep.pass() ? "all checks passed" : "validation FAILED") << "\n";
  }
  return rep.pass() ? kOk : kFailed;
}

// ---- compose-energy ---------------------------------------------------------

struct ComposeArgs {
  std::string config;
  std::optional<int> sf;
  std::optional<int> payload_bits;
  std::optional<double> bandwidth;
  std::optional<double> tx_power;
  bool explicit_header = false;
};

int run_compose(const ComposeArgs& a) {
  const SimConfig cfg = a.config.empty() ? default_config() : load_config(a.config);
  EnergyComponents c = cfg.energy.components.value_or(EnergyComponents{});
  if (a.sf) c.spreading_factor = *a.sf;
  if (a.payload_bits) c.payload_bits = *a.payload_bits;
  if (a.bandwidth) c.bandwidth_hz = *a.bandwidth;
  if (a.tx_power) c.iot_tx_power = *a.tx_power;
  if (a.explicit_header) c.explicit_header = true;

  const double toa = lora_time_on_air(c);
  const StageEnergy st = stage_energies(c);
  const double total = compose_energy(c);
  const double ref = cfg.energy.e_tot_per_update;
  std::cout << "time_on_air_s = " << toa << "\ndevice_J = " << st.device
            << "\ngateway_J = " << st.gateway << "\nserver_J = " << st.server
            << "\ne_tot_J = " << total << "\nconfigured_e_tot_J = " << ref
            << "\nrelative_difference = " << (ref > 0.0 ? total / ref - 1.0 : 0.0) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Carbon-aware age-of-information scheduling simulator"};
  app.name("saoithe");
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "run one policy over one horizon");
  simulate->add_option("--config", sim.config, "config file")->required()->check(CLI::ExistingFile);
  add_trace_options(simulate, sim.trace);
  simulate->add_option("--policy", sim.policy)
      ->check(CLI::IsMember({"saoithe", "round_robin", "random"}))
      ->capture_default_str();
  simulate->add_option("--lambda", sim.lambda, "carbon price; calibrated when omitted")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--mu", sim.mu, "duty price")->check(CLI::NonNegativeNumber);
  simulate->add_flag("--no-gate", sim.no_gate, "do not enforce the budgets per slot");
  simulate->add_option("--out", sim.out, "output directory (env SAOITHE_OUT_DIR)")
      ->capture_default_str();
  simulate->add_option("--seed", sim.seed, "policy seed")->capture_default_str();
  simulate->add_option("--tol", sim.tol, "calibration tolerance")->check(CLI::PositiveNumber);
  simulate->add_option("--max-iters", sim.max_iters)->check(CLI::PositiveNumber);
  add_policy_options(simulate, sim.pol);

  CalibrateArgs cal;
  auto* calibrate_cmd = app.add_subcommand("calibrate", "learn the shadow prices");
  calibrate_cmd->add_option("--config", cal.config)->required()->check(CLI::ExistingFile);
  add_trace_options(calibrate_cmd, cal.trace);
  calibrate_cmd->add_option("--tol", cal.tol)->check(CLI::PositiveNumber)->capture_default_str();
  calibrate_cmd->add_option("--max-iters", cal.max_iters)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  calibrate_cmd->add_option("--out", cal.out, "write the report here");
  add_policy_options(calibrate_cmd, cal.pol);

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a grid of cells");
  sweep_cmd->add_option("--spec", sw.spec, "sweep spec (JSON)")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--out", sw.out)->capture_default_str();
  sweep_cmd->add_option("--jobs", sw.jobs, "concurrent cells (default: all cores)")
      ->check(CLI::NonNegativeNumber);

  BoundaryArgs bd;
  auto* boundary = app.add_subcommand("boundary", "critical age over an intensity grid");
  boundary->add_option("--xi-min", bd.xi_min)->check(CLI::NonNegativeNumber)->capture_default_str();
  boundary->add_option("--xi-max", bd.xi_max)->check(CLI::NonNegativeNumber)->capture_default_str();
  boundary->add_option("--steps", bd.steps)->check(CLI::Range(2, 1000000))->capture_default_str();
  boundary->add_option("--lambda", bd.lambda)->check(CLI::NonNegativeNumber)->capture_default_str();
  boundary->add_option("--mu", bd.mu)->check(CLI::NonNegativeNumber)->capture_default_str();
  boundary->add_option("--c-duty-frac", bd.c_duty_frac)->check(CLI::NonNegativeNumber);
  boundary->add_option("--e-tot", bd.e_tot)->check(CLI::PositiveNumber)->capture_default_str();
  boundary->add_option("--fit-min-cost", bd.fit_min_cost)->capture_default_str();
  boundary->add_option("--out", bd.out, "CSV file (default: stdout)");

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "run the invariant and oracle suites");
  validate->add_option("--suite", va.suite)
      ->check(CLI::IsMember({"whittle", "oracle", "dynamics", "all"}))
      ->capture_default_str();
  validate->add_option("--seed", va.seed)->capture_default_str();
  validate->add_flag("--json", va.json);

  ComposeArgs ce;
  auto* compose = app.add_subcommand("compose-energy", "per-update energy from its components");
  compose->add_option("--config", ce.config)->check(CLI::ExistingFile);
  compose->add_option("--sf", ce.sf)->check(CLI::Range(6, 12));
  compose->add_option("--payload-bits", ce.payload_bits)->check(CLI::PositiveNumber);
  compose->add_option("--bandwidth", ce.bandwidth)->check(CLI::PositiveNumber);
  compose->add_option("--tx-power", ce.tx_power)->check(CLI::NonNegativeNumber);
  compose->add_flag("--explicit-header", ce.explicit_header);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*calibrate_cmd) return run_calibrate(cal);
    if (*sweep_cmd) return run_sweep(sw);
    if (*boundary) return run_boundary(bd);
    if (*validate) return run_validate(va);
    if (*compose) return run_compose(ce);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "invalid config:\n";
    for (const auto& issue : e.issues()) {
      std::cerr << "  " << issue.field << ": " << issue.message << "\n";
    }
    return kFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }
  return kUsage;
}
