#include "saoithe/reporting.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "saoithe/config_io.hpp"

namespace saoithe {

using nlohmann::json;

EpisodeSummary summarize(const EpisodeResult& r) {
  EpisodeSummary s;
  s.policy = r.policy;
  s.region = r.region;
  s.num_sources = r.num_sources;
  s.horizon = r.horizon;
  s.slot_duration = r.slot_duration;
  s.gate = r.gate;
  s.avg_aoi_slots = r.avg_aoi_slots;
  s.avg_aoi_minutes = r.avg_aoi_minutes;
  s.total_cf = r.total_cf;
  s.total_duty = r.total_duty;
  s.total_energy = r.total_energy;
  s.idle_cf = r.idle_cf;
  s.total_activations = r.total_activations;
  s.total_deliveries = r.total_deliveries;
  s.total_blocked = r.total_blocked;
  s.cf_budget = r.cf_budget;
  s.duty_budget = r.duty_budget;
  s.budget_exhausted_at = r.budget_exhausted_at;
  s.prefix_violations = r.prefix_violations;
  s.seed = r.seed;
  s.config_digest = r.config_digest;
  s.policy_metadata = r.policy_metadata;
  return s;
}

json to_json(const EpisodeSummary& s) {
  json j = {{"policy", s.policy},
            {"region", s.region},
            {"num_sources", s.num_sources},
            {"horizon", s.horizon},
            {"slot_duration", s.slot_duration},
            {"gate", s.gate},
            {"avg_aoi_slots", s.avg_aoi_slots},
            {"avg_aoi_minutes", s.avg_aoi_minutes},
            {"total_cf", s.total_cf},
            {"total_duty", s.total_duty},
            {"total_energy", s.total_energy},
            {"idle_cf", s.idle_cf},
            {"total_activations", s.total_activations},
            {"total_deliveries", s.total_deliveries},
            {"total_blocked", s.total_blocked},
            {"cf_budget", s.cf_budget},
            {"duty_budget", s.duty_budget},
            {"prefix_violations", s.prefix_violations},
            {"seed", s.seed},
            {"config_digest", s.config_digest},
            {"policy_metadata", s.policy_metadata}};
  j["budget_exhausted_at"] =
      s.budget_exhausted_at ? json(*s.budget_exhausted_at) : json(nullptr);
  return j;
}

EpisodeSummary summary_from_json(const json& j) {
  EpisodeSummary s;
  j.at("policy").get_to(s.policy);
  j.at("region").get_to(s.region);
  j.at("num_sources").get_to(s.num_sources);
  j.at("horizon").get_to(s.horizon);
  j.at("slot_duration").get_to(s.slot_duration);
  j.at("gate").get_to(s.gate);
  j.at("avg_aoi_slots").get_to(s.avg_aoi_slots);
  j.at("avg_aoi_minutes").get_to(s.avg_aoi_minutes);
  j.at("total_cf").get_to(s.total_cf);
  j.at("total_duty").get_to(s.total_duty);
  j.at("total_energy").get_to(s.total_energy);
  j.at("idle_cf").get_to(s.idle_cf);
  j.at("total_activations").get_to(s.total_activations);
  j.at("total_deliveries").get_to(s.total_deliveries);
  j.at("total_blocked").get_to(s.total_blocked);
  j.at("cf_budget").get_to(s.cf_budget);
  j.at("duty_budget").get_to(s.duty_budget);
  j.at("prefix_violations").get_to(s.prefix_violations);
  j.at("seed").get_to(s.seed);
  j.at("config_digest").get_to(s.config_digest);
  s.policy_metadata = j.at("policy_metadata");
  const json& b = j.at("budget_exhausted_at");
  if (!b.is_null()) s.budget_exhausted_at = b.get<int>();
  return s;
}

std::string episode_csv(const EpisodeResult& r) {
  std::string out = "slot,source,aoi,cf_cum,duty_cum\n";
  out.reserve(out.size() + static_cast<std::size_t>(r.horizon) * r.num_sources * 32);
  for (int t = 0; t < r.horizon; ++t) {
    const std::string tail = "," + fmt_double(r.cf_cumulative[static_cast<std::size_t>(t)]) +
                             "," + fmt_double(r.duty_cumulative[static_cast<std::size_t>(t)]) +
                             "\n";
    const std::string head = std::to_string(t) + ",";
    for (int n = 0; n < r.num_sources; ++n) {
      out += head;
      out += std::to_string(n);
      out += ',';
      out += std::to_string(
          r.aoi_trajectories[static_cast<std::size_t>(n)][static_cast<std::size_t>(t)]);
      out += tail;
    }
  }
  return out;
}

std::string episode_summary_json(const EpisodeResult& r) {
  return to_json(summarize(r)).dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  out << text;
  out.flush();
  if (!out) {
    throw std::runtime_error("write failed for " + path.string());
  }
}

void emit(const EpisodeResult& r, OutputFormat format, const std::filesystem::path& path) {
  write_text_file(path, format == OutputFormat::csv ? episode_csv(r) : episode_summary_json(r));
}

EpisodeSummary load_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  return summary_from_json(json::parse(in));
}

std::string output_stem(const std::string& policy, const std::string& region, int num_sources,
                        double kappa_units) {
  return policy + "_" + region + "_N" + std::to_string(num_sources) + "_kappa" +
         fmt_double(kappa_units);
}

// ---- sweeps ---------------------------------------------------------------

double t_quantile_95(int dof) {
  static constexpr double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
                                     2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
                                     2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
                                     2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
  if (dof < 1) return 0.0;
  if (dof <= 30) return table[dof - 1];
  return 1.96 + 2.5 / dof;
}

namespace {

std::string json_scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return fmt_double(v.get<double>());
  return v.dump();
}

template <typename T>
std::vector<T> read_list(const json& j, const char* key, std::vector<T> fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_array()) return {v.get<T>()};
  return v.get<std::vector<T>>();
}

}  // namespace

SweepSpec sweep_spec_from_json(const json& j, const std::filesystem::path& base_dir) {
  SweepSpec s;
  if (j.contains("config_file")) {
    std::filesystem::path p = j.at("config_file").get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    s.base = load_config(p);
  }
  if (j.contains("config_text")) {
    s.base = parse_config(j.at("config_text").get<std::string>());
  }
  if (j.contains("config")) {
    std::string text = format_config(s.base);
    for (const auto& [k, v] : j.at("config").items()) {
      text += k + " = " + json_scalar_text(v) + "\n";
    }
    s.base = parse_config(text);
  }
  s.num_sources = read_list<int>(j, "num_sources", s.num_sources);
  s.kappa_units = read_list<double>(j, "kappa", s.kappa_units);
  s.regions = read_list<std::string>(j, "regions", s.regions);
  s.policies = read_list<std::string>(j, "policies", s.policies);
  s.replications = j.value("replications", s.replications);
  s.seed = j.value("seed", s.seed);
  s.gate = j.value("gate", s.gate);
  s.calibration.tolerance = j.value("tolerance", s.calibration.tolerance);
  s.calibration.max_iters = j.value("max_iters", s.calibration.max_iters);
  if (j.contains("forwarding")) {
    s.calibration.policy.forwarding =
        forwarding_mode_from_string(j.at("forwarding").get<std::string>());
  }
  s.jobs = j.value("jobs", s.jobs);
  if (s.replications < 1) throw std::invalid_argument("replications must be >= 1");
  for (const auto& p : s.policies) {
    if (p != "saoithe" && p != "round_robin" && p != "random") {
      throw std::invalid_argument("unknown policy '" + p + "'");
    }
  }
  return s;
}

json to_json(const SweepSpec& s) {
  return {{"config_text", format_config(s.base)},
          {"num_sources", s.num_sources},
          {"kappa", s.kappa_units},
          {"regions", s.regions},
          {"policies", s.policies},
          {"replications", s.replications},
          {"seed", s.seed},
          {"gate", s.gate},
          {"tolerance", s.calibration.tolerance},
          {"max_iters", s.calibration.max_iters},
          {"forwarding", to_string(s.calibration.policy.forwarding)}};
}

json to_json(const CellSummary& c) {
  json j = {{"policy", c.policy},
            {"region", c.region},
            {"num_sources", c.num_sources},
            {"kappa_units", c.kappa_units},
            {"kappa_grams", c.kappa_grams},
            {"failed", c.failed},
            {"replications", c.replications},
            {"avg_aoi_slots", c.avg_aoi_slots},
            {"avg_aoi_minutes", c.avg_aoi_minutes},
            {"half_width_slots", c.half_width_slots},
            {"total_cf", c.total_cf},
            {"total_duty", c.total_duty},
            {"prefix_violations", c.prefix_violations},
            {"rr_period", c.rr_period},
            {"lambda", c.lambda},
            {"mu", c.mu},
            {"calibration_converged", c.calibration_converged},
            {"calibration_pinned", c.calibration_pinned},
            {"seeds", c.seeds}};
  j["budget_exhausted_at"] =
      c.budget_exhausted_at ? json(*c.budget_exhausted_at) : json(nullptr);
  if (c.failed) j["error"] = c.error;
  return j;
}

json SweepResult::to_json() const {
  json cj = json::array();
  for (const auto& c : cells) cj.push_back(saoithe::to_json(c));
  return {{"spec", saoithe::to_json(spec)}, {"cells", cj}, {"digest", digest}};
}

const CellSummary* SweepResult::find(const std::string& policy, const std::string& region,
                                     int num_sources, double kappa_units) const {
  for (const auto& c : cells) {
    if (c.policy == policy && c.region == region && c.num_sources == num_sources &&
        c.kappa_units == kappa_units) {
      return &c;
    }
  }
  return nullptr;
}

std::unique_ptr<Policy> make_policy(const std::string& name, const ValidatedConfig& cfg,
                                    const CarbonTrace& trace, double lambda, double mu,
                                    std::uint64_t seed, const SaoitheOptions& opts) {
  if (name == "saoithe") {
    return std::make_unique<SaoithePolicy>(lambda, mu, cfg.e_tot(), cfg.c_duty_frac(),
                                           cfg.capacity(), opts);
  }
  if (name == "round_robin" || name == "random") {
    const int p = derive_rr_period(cfg.kappa_grams(), trace, cfg.e_tot(), cfg.num_sources(),
                                   cfg.horizon());
    if (name == "round_robin") {
      return std::make_unique<RoundRobinPolicy>(RoundRobinParams{p, {}}, cfg.num_sources(),
                                                cfg.capacity());
    }
    return std::make_unique<RandomPolicy>(RandomParams{1.0 / p, seed}, cfg.capacity());
  }
  throw std::invalid_argument("unknown policy '" + name + "' (expected saoithe|round_robin|random)");
}

namespace {

CarbonTrace horizon_slice(const CarbonTrace& trace, int horizon) {
  CarbonTrace out = trace;
  out.xi.resize(static_cast<std::size_t>(horizon));
  return out;
}

struct CellOutcome {
  CellSummary summary;
  std::optional<EpisodeResult> first;
};

CellOutcome run_cell(const SweepSpec& spec, CellSummary cell, const CarbonTrace& trace) {
  CellOutcome out;
  SimConfig raw = spec.base;
  raw.num_sources = cell.num_sources;
  raw.cf_budget = cell.kappa_units;
  const ValidatedConfig cfg = validate_config(raw);
  cell.kappa_grams = cfg.kappa_grams();
  const CarbonTrace slice = horizon_slice(trace, cfg.horizon());

  if (cell.policy == "saoithe") {
    const CalibrationReport rep = calibrate(cfg, slice, spec.calibration);
    cell.lambda = rep.lambda_star;
    cell.mu = rep.mu_star;
    cell.calibration_converged = rep.converged;
    cell.calibration_pinned = rep.pinned;
  } else {
    cell.rr_period = derive_rr_period(cfg.kappa_grams(), slice, cfg.e_tot(), cfg.num_sources(),
                                      cfg.horizon());
  }

  const int reps = cell.policy == "random" ? spec.replications : 1;
  std::vector<double> aoi;
  double cf = 0.0;
  double duty = 0.0;
  for (int k = 0; k < reps; ++k) {
    const std::uint64_t seed = spec.seed + static_cast<std::uint64_t>(k);
    auto policy = make_policy(cell.policy, cfg, slice, cell.lambda, cell.mu, seed,
                              spec.calibration.policy);
    EpisodeResult r = run_episode(cfg, slice, *policy, spec.gate, seed);
    aoi.push_back(r.avg_aoi_slots);
    cf += r.total_cf;
    duty += r.total_duty;
    cell.prefix_violations += r.prefix_violations;
    cell.seeds.push_back(seed);
    if (k == 0) {
      cell.budget_exhausted_at = r.budget_exhausted_at;
      out.first = std::move(r);
    }
  }
  const double n = static_cast<double>(reps);
  double mean = 0.0;
  for (double a : aoi) mean += a;
  mean /= n;
  double var = 0.0;
  for (double a : aoi) var += (a - mean) * (a - mean);
  cell.replications = reps;
  cell.avg_aoi_slots = mean;
  cell.avg_aoi_minutes = mean * cfg.raw().slot_duration / 60.0;
  cell.half_width_slots = reps > 1 ? t_quantile_95(reps - 1) * std::sqrt(var / (n - 1) / n) : 0.0;
  cell.total_cf = cf / n;
  cell.total_duty = duty / n;
  out.summary = std::move(cell);
  return out;
}

}  // namespace

SweepResult sweep(const SweepSpec& spec, const CellSink& sink) {
  SweepResult res;
  res.spec = spec;

  std::vector<std::optional<CarbonTrace>> traces;
  std::vector<std::string> trace_errors;
  for (const auto& region : spec.regions) {
    try {
      traces.emplace_back(synthetic_trace(region_from_string(region), spec.base.horizon_slots,
                                          spec.base.slot_duration, spec.seed));
      trace_errors.emplace_back();
    } catch (const std::exception& e) {
      traces.emplace_back(std::nullopt);
      trace_errors.emplace_back(e.what());
    }
  }

  struct Job {
    CellSummary cell;
    std::size_t region;
  };
  std::vector<Job> jobs;
  for (const auto& policy : spec.policies) {
    for (std::size_t r = 0; r < spec.regions.size(); ++r) {
      for (int n : spec.num_sources) {
        for (double k : spec.kappa_units) {
          CellSummary c;
          c.policy = policy;
          c.region = spec.regions[r];
          c.num_sources = n;
          c.kappa_units = k;
          jobs.push_back({c, r});
        }
      }
    }
  }
  res.cells.resize(jobs.size());

  std::atomic<std::size_t> next{0};
  std::mutex sink_mutex;
  auto worker = [&]() {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      CellOutcome out;
      try {
        if (!traces[job.region]) throw std::invalid_argument(trace_errors[job.region]);
        out = run_cell(spec, job.cell, *traces[job.region]);
      } catch (const std::exception& e) {
        out.summary = job.cell;
        out.summary.failed = true;
        out.summary.error = e.what();
      }
      res.cells[i] = out.summary;
      if (sink && out.first) {
        std::lock_guard<std::mutex> lock(sink_mutex);
        sink(out.summary, *out.first);
      }
    }
  };

  unsigned threads = spec.jobs > 0 ? static_cast<unsigned>(spec.jobs)
                                   : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, jobs.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  json body = res.to_json();
  body.erase("digest");
  res.digest = digest_hex(body.dump());
  return res;
}

// ---- decision boundary ----------------------------------------------------

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("fit_line needs equally long inputs");
  }
  LinearFit f;
  f.points = x.size();
  if (x.size() < 2) {
    f.slope = f.intercept = f.r2 = std::nan("");
    return f;
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) {
    f.slope = f.intercept = f.r2 = std::nan("");
    return f;
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

std::vector<double> linspace(double lo, double hi, int steps) {
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (steps == 1) return {lo};
  std::vector<double> out(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (steps - 1);
  }
  out.back() = hi;
  return out;
}

std::string BoundaryTable::to_csv() const {
  std::string out = "xi,cost,critical_age\n";
  for (const auto& r : rows) {
    out += fmt_double(r.xi) + "," + fmt_double(r.cost) + "," + std::to_string(r.critical_age) + "\n";
  }
  return out;
}

BoundaryTable boundary_table(std::span<const double> xi_grid, const IndexContext& ctx_base,
                             double lambda_star, double fit_min_cost) {
  for (std::size_t i = 1; i < xi_grid.size(); ++i) {
    if (!(xi_grid[i] > xi_grid[i - 1])) {
      throw std::invalid_argument("intensity grid must be increasing");
    }
  }
  BoundaryTable tab;
  tab.lambda = lambda_star;
  tab.fit_min_cost = fit_min_cost;
  std::vector<double> lx, ly;
  for (double xi : xi_grid) {
    IndexContext ctx = ctx_base;
    ctx.lambda = lambda_star;
    ctx.xi_t = xi;
    BoundaryRow row{xi, ctx.cost(), critical_age(ctx)};
    if (row.cost >= fit_min_cost && row.cost > 0.0) {
      lx.push_back(std::log(row.cost));
      ly.push_back(std::log(static_cast<double>(row.critical_age)));
    }
    tab.rows.push_back(row);
  }
  const LinearFit fit = fit_line(lx, ly);
  tab.fitted_exponent = fit.slope;
  tab.fit_points = fit.points;
  return tab;
}

}  // namespace saoithe
