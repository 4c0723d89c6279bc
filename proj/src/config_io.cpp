#include "saoithe/config_io.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace saoithe {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw std::invalid_argument("config key '" + key + "': expected an integer, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw std::invalid_argument("config key '" + key + "': expected an unsigned integer, got '" + v +
                                "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config key '" + key + "': expected true/false, got '" + v + "'");
}

using Setter = std::function<void(SimConfig&, const std::string&, const std::string&)>;

EnergyComponents& comps(SimConfig& c) {
  if (!c.energy.components) c.energy.components = EnergyComponents{};
  return *c.energy.components;
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto dbl = [&t](const char* k, double SimConfig::*m) {
      t[k] = [m](SimConfig& c, const std::string& key, const std::string& v) {
        c.*m = to_double(key, v);
      };
    };
    auto integer = [&t](const char* k, int SimConfig::*m) {
      t[k] = [m](SimConfig& c, const std::string& key, const std::string& v) {
        c.*m = static_cast<int>(to_int(key, v));
      };
    };
    auto comp_dbl = [&t](const char* k, double EnergyComponents::*m) {
      t[k] = [m](SimConfig& c, const std::string& key, const std::string& v) {
        comps(c).*m = to_double(key, v);
      };
    };
    auto comp_int = [&t](const char* k, int EnergyComponents::*m) {
      t[k] = [m](SimConfig& c, const std::string& key, const std::string& v) {
        comps(c).*m = static_cast<int>(to_int(key, v));
      };
    };
    auto comp_bool = [&t](const char* k, bool EnergyComponents::*m) {
      t[k] = [m](SimConfig& c, const std::string& key, const std::string& v) {
        comps(c).*m = to_bool(key, v);
      };
    };

    integer("horizon_slots", &SimConfig::horizon_slots);
    dbl("slot_duration", &SimConfig::slot_duration);
    integer("num_sources", &SimConfig::num_sources);
    integer("channel_capacity", &SimConfig::channel_capacity);
    dbl("cf_budget", &SimConfig::cf_budget);
    dbl("cf_budget_unit_updates", &SimConfig::cf_budget_unit_updates);
    dbl("cf_budget_unit_xi", &SimConfig::cf_budget_unit_xi);
    dbl("duty_budget", &SimConfig::duty_budget);
    dbl("duty_cost_per_tx", &SimConfig::duty_cost_per_tx);
    integer("aoi_cap", &SimConfig::aoi_cap);
    integer("initial_aoi", &SimConfig::initial_aoi);
    integer("tx_duration_slots", &SimConfig::tx_duration_slots);
    integer("fwd_duration_slots", &SimConfig::fwd_duration_slots);
    t["rng_seed"] = [](SimConfig& c, const std::string& key, const std::string& v) {
      c.rng_seed = to_u64(key, v);
    };
    t["attribution"] = [](SimConfig& c, const std::string&, const std::string& v) {
      c.attribution = energy_attribution_from_string(v);
    };
    t["e_tot_per_update"] = [](SimConfig& c, const std::string& key, const std::string& v) {
      c.energy.e_tot_per_update = to_double(key, v);
    };
    t["idle_power"] = [](SimConfig& c, const std::string& key, const std::string& v) {
      c.energy.idle_power = to_double(key, v);
    };
    t["energy_components"] = [](SimConfig& c, const std::string& key, const std::string& v) {
      if (v == "none") {
        c.energy.components.reset();
      } else if (v == "default") {
        c.energy.components = EnergyComponents{};
      } else {
        throw std::invalid_argument("config key '" + key + "': expected none/default");
      }
    };

    comp_dbl("iot_tx_power", &EnergyComponents::iot_tx_power);
    comp_dbl("iot_rx_power", &EnergyComponents::iot_rx_power);
    comp_dbl("rx_window_seconds", &EnergyComponents::rx_window_seconds);
    comp_dbl("gw_tx_power", &EnergyComponents::gw_tx_power);
    comp_dbl("gw_fwd_seconds", &EnergyComponents::gw_fwd_seconds);
    comp_dbl("sv_proc_power", &EnergyComponents::sv_proc_power);
    comp_dbl("task_flops", &EnergyComponents::task_flops);
    comp_dbl("server_flops_per_sec", &EnergyComponents::server_flops_per_sec);
    comp_int("spreading_factor", &EnergyComponents::spreading_factor);
    comp_dbl("bandwidth_hz", &EnergyComponents::bandwidth_hz);
    comp_int("payload_bits", &EnergyComponents::payload_bits);
    comp_int("preamble_symbols", &EnergyComponents::preamble_symbols);
    comp_int("coding_rate", &EnergyComponents::coding_rate);
    comp_bool("explicit_header", &EnergyComponents::explicit_header);
    comp_bool("crc", &EnergyComponents::crc);
    comp_bool("low_data_rate_optimize", &EnergyComponents::low_data_rate_optimize);
    return t;
  }();
  return table;
}

}  // namespace

std::string fmt_double(double v) {
  char buf[64];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

SimConfig parse_config(const std::string& text) {
  SimConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& table = setters();
    auto it = table.find(key);
    if (it == table.end()) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" +
                                  key + "'");
    }
    it->second(cfg, key, value);
  }
  return cfg;
}

SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const SimConfig& c) {
  std::ostringstream os;
  os << "# Simulation configuration.\n"
     << "# Units: slot_duration, duty_cost_per_tx, rx_window_seconds, gw_fwd_seconds in s;\n"
     << "#   powers in W; e_tot_per_update in J; task_flops in FLOP; server_flops_per_sec in\n"
     << "#   FLOP/s; bandwidth_hz in Hz; aoi_cap, initial_aoi and *_duration_slots in slots;\n"
     << "#   duty_budget as a fraction of the horizon; cf_budget in budget units, one unit\n"
     << "#   being cf_budget_unit_updates updates at cf_budget_unit_xi gCO2/kWh (0 = grams).\n";
  os << "horizon_slots = " << c.horizon_slots << "\n"
     << "slot_duration = " << fmt_double(c.slot_duration) << "\n"
     << "num_sources = " << c.num_sources << "\n"
     << "channel_capacity = " << c.channel_capacity << "\n"
     << "cf_budget = " << fmt_double(c.cf_budget) << "\n"
     << "cf_budget_unit_updates = " << fmt_double(c.cf_budget_unit_updates) << "\n"
     << "cf_budget_unit_xi = " << fmt_double(c.cf_budget_unit_xi) << "\n"
     << "duty_budget = " << fmt_double(c.duty_budget) << "\n"
     << "duty_cost_per_tx = " << fmt_double(c.duty_cost_per_tx) << "\n"
     << "aoi_cap = " << c.aoi_cap << "\n"
     << "initial_aoi = " << c.initial_aoi << "\n"
     << "tx_duration_slots = " << c.tx_duration_slots << "\n"
     << "fwd_duration_slots = " << c.fwd_duration_slots << "\n"
     << "attribution = " << to_string(c.attribution) << "\n"
     << "rng_seed = " << c.rng_seed << "\n"
     << "e_tot_per_update = " << fmt_double(c.energy.e_tot_per_update) << "\n"
     << "idle_power = " << fmt_double(c.energy.idle_power) << "\n";
  if (!c.energy.components) {
    os << "energy_components = none\n";
    return os.str();
  }
  const auto& e = *c.energy.components;
  auto b = [](bool v) { return v ? "true" : "false"; };
  os << "iot_tx_power = " << fmt_double(e.iot_tx_power) << "\n"
     << "iot_rx_power = " << fmt_double(e.iot_rx_power) << "\n"
     << "rx_window_seconds = " << fmt_double(e.rx_window_seconds) << "\n"
     << "gw_tx_power = " << fmt_double(e.gw_tx_power) << "\n"
     << "gw_fwd_seconds = " << fmt_double(e.gw_fwd_seconds) << "\n"
     << "sv_proc_power = " << fmt_double(e.sv_proc_power) << "\n"
     << "task_flops = " << fmt_double(e.task_flops) << "\n"
     << "server_flops_per_sec = " << fmt_double(e.server_flops_per_sec) << "\n"
     << "spreading_factor = " << e.spreading_factor << "\n"
     << "bandwidth_hz = " << fmt_double(e.bandwidth_hz) << "\n"
     << "payload_bits = " << e.payload_bits << "\n"
     << "preamble_symbols = " << e.preamble_symbols << "\n"
     << "coding_rate = " << e.coding_rate << "\n"
     << "explicit_header = " << b(e.explicit_header) << "\n"
     << "crc = " << b(e.crc) << "\n"
     << "low_data_rate_optimize = " << b(e.low_data_rate_optimize) << "\n";
  return os.str();
}

void save_config(const SimConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write config file " + path.string());
  }
  out << format_config(cfg);
  if (!out) {
    throw std::runtime_error("write failed for " + path.string());
  }
}

}  // namespace saoithe
