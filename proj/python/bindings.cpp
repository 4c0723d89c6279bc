#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "saoithe/calibration.hpp"
#include "saoithe/config_io.hpp"
#include "saoithe/core_model.hpp"
#include "saoithe/episode.hpp"
#include "saoithe/reporting.hpp"
#include "saoithe/traces.hpp"
#include "saoithe/validation.hpp"
#include "saoithe/whittle.hpp"

namespace py = pybind11;
using namespace saoithe;

namespace {

py::object to_py(const nlohmann::json& j) {
  switch (j.type()) {
    case nlohmann::json::value_t::null:
      return py::none();
    case nlohmann::json::value_t::boolean:
      return py::bool_(j.get<bool>());
    case nlohmann::json::value_t::number_integer:
      return py::int_(j.get<std::int64_t>());
    case nlohmann::json::value_t::number_unsigned:
      return py::int_(j.get<std::uint64_t>());
    case nlohmann::json::value_t::number_float:
      return py::float_(j.get<double>());
    case nlohmann::json::value_t::string:
      return py::str(j.get<std::string>());
    case nlohmann::json::value_t::array: {
      py::list out;
      for (const auto& v : j) out.append(to_py(v));
      return out;
    }
    default: {
      py::dict out;
      for (const auto& [k, v] : j.items()) out[py::str(k)] = to_py(v);
      return out;
    }
  }
}

CarbonTrace make_trace(const std::vector<double>& xi, const ValidatedConfig& cfg,
                       const std::string& label) {
  CarbonTrace t;
  t.xi = xi;
  t.slot_duration = cfg.raw().slot_duration;
  t.region_label = label;
  return t;
}

SaoitheOptions options(const std::string& forwarding, const std::string& outstanding) {
  return {forwarding_mode_from_string(forwarding), outstanding_rule_from_string(outstanding)};
}

py::dict simulate(const std::string& config_text, const std::vector<double>& xi,
                  const std::string& policy, std::optional<double> lambda, double mu, bool gate,
                  std::uint64_t seed, const std::string& label, const std::string& forwarding,
                  const std::string& outstanding) {
  const ValidatedConfig cfg = validate_config(parse_config(config_text));
  const CarbonTrace trace = make_trace(xi, cfg, label);
  const SaoitheOptions opts = options(forwarding, outstanding);
  nlohmann::json calibration;
  double lam = lambda.value_or(0.0);
  double m = mu;
  EpisodeResult r;
  {
    py::gil_scoped_release release;
    if (policy == "saoithe" && !lambda) {
      CalibrationOptions copts;
      copts.policy = opts;
      const CalibrationReport rep = calibrate(cfg, trace, copts);
      lam = rep.lambda_star;
      m = rep.mu_star;
      calibration = rep.to_json();
      calibration.erase("trace");
    }
    auto p = make_policy(policy, cfg, trace, lam, m, seed, opts);
    r = run_episode(cfg, trace, *p, gate, seed);
  }
  py::dict out = to_py(to_json(summarize(r)));
  out["cf_cumulative"] = r.cf_cumulative;
  out["duty_cumulative"] = r.duty_cumulative;
  out["aoi"] = r.aoi_trajectories;
  out["calibration"] = to_py(calibration);
  return out;
}

py::dict run_calibration(const std::string& config_text, const std::vector<double>& xi,
                         double tolerance, int max_iters, const std::string& forwarding,
                         const std::string& outstanding) {
  const ValidatedConfig cfg = validate_config(parse_config(config_text));
  const CarbonTrace trace = make_trace(xi, cfg, "custom");
  CalibrationOptions opts;
  opts.tolerance = tolerance;
  opts.max_iters = max_iters;
  opts.policy = options(forwarding, outstanding);
  CalibrationReport rep;
  {
    py::gil_scoped_release release;
    rep = calibrate(cfg, trace, opts);
  }
  return to_py(rep.to_json());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Carbon-aware AoI scheduling: index math, simulation and calibration.";

  m.def("urgency", [](std::int64_t x) { return urgency(x); }, py::arg("aoi"));
  m.def("whittle_index", py::overload_cast<std::int64_t, double>(&whittle_index), py::arg("aoi"),
        py::arg("cost"));
  m.def("buffered_index", py::overload_cast<std::int64_t, std::int64_t, double>(&buffered_index),
        py::arg("aoi"), py::arg("buf_age"), py::arg("cost"));
  m.def("critical_age", py::overload_cast<double>(&critical_age), py::arg("cost"));
  m.def("carbon_cost", &carbon_cost, py::arg("xi"), py::arg("energy_j"),
        "gCO2eq emitted by `energy_j` joules at `xi` gCO2/kWh.");

  m.def("default_config_text", [] { return format_config(default_config()); });
  m.def("normalize_config", [](const std::string& text) {
    const SimConfig c = parse_config(text);
    validate_config(c);
    return format_config(c);
  }, py::arg("text"), "Parses, validates and reformats a config; raises ValueError.");
  m.def("compose_energy", [](const std::string& text) {
    const SimConfig c = parse_config(text);
    return compose_energy(c.energy.components.value_or(EnergyComponents{}));
  }, py::arg("config_text"));
  m.def("kappa_grams", [](const std::string& text) {
    return validate_config(parse_config(text)).kappa_grams();
  }, py::arg("config_text"));

  m.def("synthetic_trace", [](const std::string& region, int horizon, double slot, std::uint64_t seed) {
    return synthetic_trace(region_from_string(region), horizon, slot, seed).xi;
  }, py::arg("region"), py::arg("horizon") = 288, py::arg("slot_duration") = 300.0,
     py::arg("seed") = 1);
  m.def("load_trace", [](const std::string& path, double slot, int horizon,
                         std::optional<std::string> start) {
    const RawCiSeries s = load_ci_csv(path);
    const std::int64_t t0 = start ? parse_timestamp(*start) : s.timestamps.front();
    return resample_to_slots(s, slot, horizon, t0).xi;
  }, py::arg("path"), py::arg("slot_duration") = 300.0, py::arg("horizon") = 288,
     py::arg("start") = py::none());

  m.def("simulate", &simulate, py::arg("config_text"), py::arg("xi"),
        py::arg("policy") = "saoithe", py::arg("lambda_") = py::none(), py::arg("mu") = 0.0,
        py::arg("gate") = true, py::arg("seed") = 1, py::arg("label") = "custom",
        py::arg("forwarding") = "greedy", py::arg("outstanding") = "effective_age");
  m.def("calibrate", &run_calibration, py::arg("config_text"), py::arg("xi"),
        py::arg("tolerance") = 0.01, py::arg("max_iters") = 200, py::arg("forwarding") = "greedy",
        py::arg("outstanding") = "effective_age");

  m.def("validate", [](const std::string& suite, std::uint64_t seed) {
    ValidationReport rep;
    {
      py::gil_scoped_release release;
      rep = run_validation(suite, seed);
    }
    return to_py(rep.to_json());
  }, py::arg("suite") = "all", py::arg("seed") = 1);

  m.def("boundary", [](const std::vector<double>& xi_grid, double lambda, double e_tot,
                       double fit_min_cost) {
    IndexContext ctx;
    ctx.e_tot = e_tot;
    const BoundaryTable b = boundary_table(xi_grid, ctx, lambda, fit_min_cost);
    py::list rows;
    for (const BoundaryRow& r : b.rows) rows.append(py::make_tuple(r.xi, r.cost, r.critical_age));
    py::dict out;
    out["rows"] = rows;
    out["fitted_exponent"] = b.fitted_exponent;
    out["fit_points"] = b.fit_points;
    return out;
  }, py::arg("xi_grid"), py::arg("lambda_") = 1e8, py::arg("e_tot") = 0.9251,
     py::arg("fit_min_cost") = 100.0);
}
