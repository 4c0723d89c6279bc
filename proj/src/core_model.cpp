#include "saoithe/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace saoithe {

namespace {

std::string join_issues(const std::vector<ConfigIssue>& issues) {
  std::ostringstream os;
  os << "invalid configuration:";
  for (const auto& i : issues) {
    os << " [" << i.field << ": " << i.message << "]";
  }
  return os.str();
}

void require_non_negative(double v, const char* what) {
  if (!(v >= 0.0)) {
    throw std::domain_error(std::string(what) + " must be non-negative");
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : std::invalid_argument(join_issues(issues)), issues_(std::move(issues)) {}

bool BudgetLedger::affords(double cf, double duty) const {
  // Relative slack absorbs summation round-off at the boundary.
  constexpr double kRel = 1e-12;
  return cf_spent + cf <= cf_budget * (1.0 + kRel) &&
         duty_spent + duty <= duty_budget * (1.0 + kRel);
}

void BudgetLedger::charge(double cf, double duty) {
  require_non_negative(cf, "cf charge");
  require_non_negative(duty, "duty charge");
  cf_spent += cf;
  duty_spent += duty;
}

double carbon_cost(double xi, double energy) {
  require_non_negative(xi, "carbon intensity");
  require_non_negative(energy, "energy");
  return xi * energy / kJoulesPerKwh;
}

double lora_time_on_air(const EnergyComponents& c) {
  if (c.spreading_factor < 6 || c.spreading_factor > 12) {
    throw std::domain_error("spreading factor must lie in [6, 12]");
  }
  if (!(c.bandwidth_hz > 0.0)) {
    throw std::domain_error("bandwidth must be positive");
  }
  const double sf = c.spreading_factor;
  const double t_sym = std::ldexp(1.0, c.spreading_factor) / c.bandwidth_hz;
  const double payload_bytes = std::ceil(c.payload_bits / 8.0);
  const double ih = c.explicit_header ? 0.0 : 1.0;
  const double de = c.low_data_rate_optimize ? 1.0 : 0.0;
  const double crc = c.crc ? 1.0 : 0.0;
  const double num = 8.0 * payload_bytes - 4.0 * sf + 28.0 + 16.0 * crc - 20.0 * ih;
  const double den = 4.0 * (sf - 2.0 * de);
  const double payload_symbols =
      8.0 + std::max(std::ceil(num / den) * (c.coding_rate + 4), 0.0);
  const double preamble = (c.preamble_symbols + 4.25) * t_sym;
  return preamble + payload_symbols * t_sym;
}

StageEnergy stage_energies(const EnergyComponents& c) {
  for (double p : {c.iot_tx_power, c.iot_rx_power, c.rx_window_seconds, c.gw_tx_power,
                   c.gw_fwd_seconds, c.sv_proc_power, c.task_flops}) {
    require_non_negative(p, "energy component");
  }
  if (!(c.server_flops_per_sec > 0.0)) {
    throw std::domain_error("server_flops_per_sec must be positive");
  }
  StageEnergy e;
  e.device = c.iot_tx_power * lora_time_on_air(c) + c.iot_rx_power * 2.0 * c.rx_window_seconds;
  e.gateway = c.gw_tx_power * c.gw_fwd_seconds;
  e.server = c.sv_proc_power * (c.task_flops / c.server_flops_per_sec);
  return e;
}

double compose_energy(const EnergyComponents& c) { return stage_energies(c).total(); }

double budget_unit_grams(const SimConfig& cfg) {
  if (cfg.cf_budget_unit_updates == 0.0) {
    return 1.0;
  }
  return cfg.cf_budget_unit_updates *
         carbon_cost(cfg.cf_budget_unit_xi, cfg.energy.e_tot_per_update);
}

std::vector<ConfigIssue> check_config(const SimConfig& cfg) {
  std::vector<ConfigIssue> out;
  auto fail = [&out](const char* field, const char* msg) { out.push_back({field, msg}); };

  if (cfg.horizon_slots < 1) fail("horizon_slots", "must be >= 1");
  if (!(cfg.slot_duration > 0.0)) fail("slot_duration", "must be > 0");
  if (cfg.num_sources < 1) fail("num_sources", "must be >= 1");
  if (cfg.channel_capacity < 1) fail("channel_capacity", "must be >= 1");
  if (!(cfg.cf_budget >= 0.0)) fail("cf_budget", "must be >= 0");
  if (!(cfg.cf_budget_unit_updates >= 0.0)) fail("cf_budget_unit_updates", "must be >= 0");
  if (!(cfg.cf_budget_unit_xi >= 0.0)) fail("cf_budget_unit_xi", "must be >= 0");
  if (!(cfg.duty_budget > 0.0 && cfg.duty_budget <= 1.0)) {
    fail("duty_budget", "must lie in (0, 1]");
  }
  if (!(cfg.duty_cost_per_tx >= 0.0)) fail("duty_cost_per_tx", "must be >= 0");
  if (cfg.aoi_cap < 3) fail("aoi_cap", "must be >= 3");
  if (cfg.initial_aoi < 1 || cfg.initial_aoi > cfg.aoi_cap) {
    fail("initial_aoi", "must lie in [1, aoi_cap]");
  }
  if (cfg.tx_duration_slots < 1) fail("tx_duration_slots", "must be >= 1");
  if (cfg.fwd_duration_slots < 1) fail("fwd_duration_slots", "must be >= 1");
  if (!(cfg.energy.e_tot_per_update > 0.0)) fail("e_tot_per_update", "must be > 0");
  if (!(cfg.energy.idle_power >= 0.0)) fail("idle_power", "must be >= 0");

  if (cfg.energy.components) {
    try {
      const double composed = compose_energy(*cfg.energy.components);
      const double e_tot = cfg.energy.e_tot_per_update;
      if (e_tot > 0.0 && std::abs(composed - e_tot) > 0.02 * e_tot) {
        fail("energy_components", "composed energy differs from e_tot_per_update by more than 2%");
      }
    } catch (const std::domain_error&) {
      fail("energy_components", "component values out of domain");
    }
  } else if (cfg.attribution == EnergyAttribution::staged) {
    fail("attribution", "staged attribution needs energy components");
  }
  return out;
}

ValidatedConfig::ValidatedConfig(SimConfig cfg) : cfg_(std::move(cfg)) {
  kappa_grams_ = cfg_.cf_budget * budget_unit_grams(cfg_);
  if (cfg_.energy.components) {
    // Scale the composed split so the stages sum to the configured E_tot.
    StageEnergy s = stage_energies(*cfg_.energy.components);
    const double k = cfg_.energy.e_tot_per_update / s.total();
    stage_energy_ = {s.device * k, s.gateway * k, s.server * k};
  } else {
    stage_energy_ = {cfg_.energy.e_tot_per_update, 0.0, 0.0};
  }
}

ValidatedConfig validate_config(const SimConfig& cfg) {
  auto issues = check_config(cfg);
  if (!issues.empty()) {
    throw ConfigError(std::move(issues));
  }
  return ValidatedConfig(cfg);
}

SimConfig default_config() { return SimConfig{}; }

const char* to_string(EnergyAttribution a) {
  return a == EnergyAttribution::single ? "single" : "staged";
}

EnergyAttribution energy_attribution_from_string(const std::string& s) {
  if (s == "single") return EnergyAttribution::single;
  if (s == "staged") return EnergyAttribution::staged;
  throw std::invalid_argument("unknown energy attribution '" + s + "'");
}

}  // namespace saoithe
