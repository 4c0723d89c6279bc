#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace saoithe {

/// Joules per kilowatt-hour.
inline constexpr double kJoulesPerKwh = 3.6e6;

/// Power levels and durations from which the per-update active energy is
/// built. Powers in watts, durations in seconds.
struct EnergyComponents {
  double iot_tx_power = 0.125;
  double iot_rx_power = 0.010;
  double rx_window_seconds = 0.1;  // each of the two Class-A receive windows
  double gw_tx_power = 3.0;
  double gw_fwd_seconds = 0.001;   // 256-bit backhaul frame at 256 kbit/s
  double sv_proc_power = 150.0;
  double task_flops = 50e6;
  double server_flops_per_sec = 10e9;

  // LoRa PHY framing fed to the time-on-air formula.
  int spreading_factor = 12;
  double bandwidth_hz = 125e3;
  int payload_bits = 256;
  int preamble_symbols = 8;
  int coding_rate = 1;  // code rate 4/(4 + coding_rate)
  bool explicit_header = false;
  bool crc = true;
  bool low_data_rate_optimize = false;

  bool operator==(const EnergyComponents&) const = default;
};

struct EnergyModel {
  double e_tot_per_update = 0.9251;
  std::optional<EnergyComponents> components = EnergyComponents{};
  /// Infrastructure overhead (gateway listening, server idle). Reported as a
  /// separate CF stream and never charged against the carbon budget.
  double idle_power = 101.5;

  bool operator==(const EnergyModel&) const = default;
};

/// Energy of one update split by the pipeline stage that consumes it.
struct StageEnergy {
  double device = 0.0;
  double gateway = 0.0;
  double server = 0.0;

  double total() const { return device + gateway + server; }
};

enum class EnergyAttribution {
  single,  // full E_tot charged when the device is activated
  staged,  // each stage charged when it runs, at that slot's intensity
};

struct SimConfig {
  int horizon_slots = 288;
  double slot_duration = 300.0;  // seconds
  int num_sources = 50;
  int channel_capacity = 8;

  /// Carbon budget in budget units. One unit is `cf_budget_unit_updates`
  /// updates priced at `cf_budget_unit_xi`; with `cf_budget_unit_updates == 0`
  /// the budget is read as grams CO2eq.
  double cf_budget = 21.5;
  double cf_budget_unit_updates = 10.0;
  double cf_budget_unit_xi = 100.0;  // gCO2/kWh

  double duty_budget = 0.01;       // fraction of the horizon
  double duty_cost_per_tx = 1.296; // seconds of airtime per transmission
  int aoi_cap = 288;               // slots
  int initial_aoi = 1;
  int tx_duration_slots = 1;
  int fwd_duration_slots = 1;

  EnergyModel energy;
  EnergyAttribution attribution = EnergyAttribution::single;
  std::uint64_t rng_seed = 1;

  bool operator==(const SimConfig&) const = default;
};

struct ConfigIssue {
  std::string field;
  std::string message;
};

class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

/// A SimConfig that has passed every invariant, together with the derived
/// quantities the simulator works in.
class ValidatedConfig {
 public:
  const SimConfig& raw() const { return cfg_; }

  int horizon() const { return cfg_.horizon_slots; }
  int num_sources() const { return cfg_.num_sources; }
  int capacity() const { return cfg_.channel_capacity; }
  int aoi_cap() const { return cfg_.aoi_cap; }
  double e_tot() const { return cfg_.energy.e_tot_per_update; }

  /// Carbon budget in grams CO2eq.
  double kappa_grams() const { return kappa_grams_; }
  /// Airtime of one transmission as a fraction of a slot.
  double c_duty_frac() const { return cfg_.duty_cost_per_tx / cfg_.slot_duration; }
  /// Duty spend of one transmission as a fraction of the whole horizon.
  double duty_per_tx() const { return c_duty_frac() / cfg_.horizon_slots; }
  double duty_allowance_seconds() const {
    return cfg_.duty_budget * cfg_.horizon_slots * cfg_.slot_duration;
  }
  /// Per-stage energy split; with no components everything sits on the device.
  const StageEnergy& stage_energy() const { return stage_energy_; }

 private:
  friend ValidatedConfig validate_config(const SimConfig& cfg);
  explicit ValidatedConfig(SimConfig cfg);

  SimConfig cfg_;
  double kappa_grams_ = 0.0;
  StageEnergy stage_energy_;
};

/// Running totals for the carbon and duty constraints of one episode.
struct BudgetLedger {
  double cf_spent = 0.0;    // gCO2eq
  double duty_spent = 0.0;  // fraction of horizon
  double cf_budget = 0.0;
  double duty_budget = 0.0;

  bool affords(double cf, double duty) const;
  void charge(double cf, double duty);
};

/// Grams CO2eq emitted by consuming `energy` joules at intensity `xi`
/// gCO2/kWh. Throws std::domain_error on negative input.
double carbon_cost(double xi, double energy);

/// LoRa time-on-air in seconds (Semtech SX127x formula).
double lora_time_on_air(const EnergyComponents& c);

StageEnergy stage_energies(const EnergyComponents& c);

/// Active energy of one update in joules.
double compose_energy(const EnergyComponents& c);

/// Every violated invariant, empty when the config is valid.
std::vector<ConfigIssue> check_config(const SimConfig& cfg);

/// Throws ConfigError listing every violated invariant.
ValidatedConfig validate_config(const SimConfig& cfg);

/// Grams per budget unit implied by the config's unit fields.
double budget_unit_grams(const SimConfig& cfg);

/// The experimental parameter set used throughout the evaluation.
SimConfig default_config();

const char* to_string(EnergyAttribution a);
EnergyAttribution energy_attribution_from_string(const std::string& s);

}  // namespace saoithe
