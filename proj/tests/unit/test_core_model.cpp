#include <cmath>

#include "doctest.h"

#include "../support/gen.hpp"
#include "saoithe/core_model.hpp"

using namespace saoithe;

namespace {

bool has_issue(const SimConfig& cfg, const std::string& field) {
  for (const auto& i : check_config(cfg)) {
    if (i.field == field) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("carbon_cost converts joules to kWh") {
  CHECK(carbon_cost(0.0, 0.9251) == 0.0);
  CHECK(carbon_cost(250.0, 0.9251) == doctest::Approx(250.0 * 0.9251 / 3.6e6));
  CHECK(carbon_cost(250.0, 0.9251) == doctest::Approx(6.424e-5).epsilon(1e-3));
  CHECK(carbon_cost(3.6e6, 1.0) == 1.0);
  CHECK_THROWS_AS(carbon_cost(-1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(carbon_cost(1.0, -1.0), std::domain_error);
}

TEST_CASE("carbon_cost is bilinear") {
  gen::Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const double xi = gen::real_in(rng, 0.0, 1000.0);
    const double e = gen::real_in(rng, 0.0, 10.0);
    const double a = gen::real_in(rng, 0.0, 5.0);
    const double b = gen::real_in(rng, 0.0, 5.0);
    CHECK(carbon_cost(a * xi, b * e) == doctest::Approx(a * b * carbon_cost(xi, e)).epsilon(1e-12));
  }
}

TEST_CASE("LoRa time on air for SF12 / 125 kHz / 32 bytes") {
  // Worked by hand: T_sym = 2^12 / 125e3 = 32.768 ms. Payload symbols
  // 8 + ceil((256 - 48 + 28 + 16 - 20) / 48) * 5 = 33, preamble 12.25.
  const EnergyComponents c;
  CHECK(lora_time_on_air(c) == doctest::Approx(45.25 * 0.032768).epsilon(1e-12));

  EnergyComponents ldro = c;
  ldro.low_data_rate_optimize = true;
  // den = 4 * (12 - 2) = 40 -> ceil(232 / 40) = 6 -> 38 payload symbols.
  CHECK(lora_time_on_air(ldro) == doctest::Approx(50.25 * 0.032768).epsilon(1e-12));

  EnergyComponents bad = c;
  bad.spreading_factor = 13;
  CHECK_THROWS_AS(lora_time_on_air(bad), std::domain_error);
}

TEST_CASE("compose_energy") {
  const EnergyComponents defaults;
  const double toa = 45.25 * 0.032768;
  const double expected = 0.125 * toa + 0.010 * 2 * 0.1 + 3.0 * 0.001 + 150.0 * 0.005;
  CHECK(compose_energy(defaults) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::abs(compose_energy(defaults) / 0.9251 - 1.0) < 0.02);

  SUBCASE("processing only") {
    EnergyComponents c;
    c.iot_tx_power = c.iot_rx_power = c.gw_tx_power = 0.0;
    CHECK(compose_energy(c) == doctest::Approx(0.75));
  }
  SUBCASE("all powers zero") {
    EnergyComponents c;
    c.iot_tx_power = c.iot_rx_power = c.gw_tx_power = c.sv_proc_power = 0.0;
    CHECK(compose_energy(c) == 0.0);
  }
  SUBCASE("zero server rate") {
    EnergyComponents c;
    c.server_flops_per_sec = 0.0;
    CHECK_THROWS_AS(compose_energy(c), std::domain_error);
  }
}

TEST_CASE("compose_energy is additive and increasing in every power") {
  gen::Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    EnergyComponents c;
    c.iot_tx_power = gen::real_in(rng, 0.0, 1.0);
    c.iot_rx_power = gen::real_in(rng, 0.0, 0.1);
    c.gw_tx_power = gen::real_in(rng, 0.0, 10.0);
    c.sv_proc_power = gen::real_in(rng, 0.0, 300.0);
    const StageEnergy s = stage_energies(c);
    CHECK(compose_energy(c) == doctest::Approx(s.device + s.gateway + s.server));

    const double base = compose_energy(c);
    const double bump = gen::real_in(rng, 1e-3, 1.0);
    for (double EnergyComponents::*field :
         {&EnergyComponents::iot_tx_power, &EnergyComponents::iot_rx_power,
          &EnergyComponents::gw_tx_power, &EnergyComponents::sv_proc_power}) {
      EnergyComponents more = c;
      more.*field += bump;
      CHECK(compose_energy(more) > base);
    }
  }
}

TEST_CASE("validate_config") {
  SUBCASE("defaults are valid") {
    CHECK(check_config(default_config()).empty());
    CHECK_NOTHROW(validate_config(default_config()));
  }
  SUBCASE("zero capacity names the field") {
    SimConfig c = default_config();
    c.channel_capacity = 0;
    CHECK(has_issue(c, "channel_capacity"));
    try {
      validate_config(c);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      REQUIRE(e.issues().size() == 1);
      CHECK(e.issues()[0].field == "channel_capacity");
    }
  }
  SUBCASE("every violation is listed") {
    SimConfig c = default_config();
    c.horizon_slots = 0;
    c.duty_budget = 0.0;
    c.aoi_cap = 2;
    c.cf_budget = -1.0;
    CHECK(has_issue(c, "horizon_slots"));
    CHECK(has_issue(c, "duty_budget"));
    CHECK(has_issue(c, "aoi_cap"));
    CHECK(has_issue(c, "cf_budget"));
  }
  SUBCASE("duty allowance") {
    const ValidatedConfig v = validate_config(default_config());
    CHECK(v.duty_allowance_seconds() == doctest::Approx(864.0));
    CHECK(v.c_duty_frac() == doctest::Approx(1.296 / 300.0));
  }
  SUBCASE("capacity above the fleet size is allowed") {
    SimConfig c = default_config();
    c.channel_capacity = 500;
    CHECK(check_config(c).empty());
  }
  SUBCASE("components far from the stated energy are rejected") {
    SimConfig c = default_config();
    c.energy.e_tot_per_update = 2.0;
    CHECK(has_issue(c, "energy_components"));
    c.energy.components.reset();
    CHECK(check_config(c).empty());
  }
  SUBCASE("idempotent") {
    const ValidatedConfig once = validate_config(default_config());
    const ValidatedConfig twice = validate_config(once.raw());
    CHECK(once.raw() == twice.raw());
    CHECK(once.kappa_grams() == twice.kappa_grams());
  }
}

TEST_CASE("budget units") {
  SimConfig c = default_config();
  const double unit = 10.0 * 100.0 * c.energy.e_tot_per_update / 3.6e6;
  CHECK(budget_unit_grams(c) == doctest::Approx(unit));
  CHECK(validate_config(c).kappa_grams() == doctest::Approx(21.5 * unit));
  c.cf_budget_unit_updates = 0.0;
  c.cf_budget = 0.25;
  CHECK(validate_config(c).kappa_grams() == 0.25);
}

TEST_CASE("stage energies are rescaled to the stated total") {
  const ValidatedConfig v = validate_config(default_config());
  CHECK(v.stage_energy().total() == doctest::Approx(v.e_tot()));
  SimConfig bare = default_config();
  bare.energy.components.reset();
  const ValidatedConfig b = validate_config(bare);
  CHECK(b.stage_energy().device == b.e_tot());
  CHECK(b.stage_energy().gateway == 0.0);
}

TEST_CASE("ledger gate") {
  BudgetLedger l{0.0, 0.0, 1.0, 0.5};
  CHECK(l.affords(1.0, 0.5));
  l.charge(0.6, 0.1);
  CHECK_FALSE(l.affords(0.5, 0.0));
  CHECK_FALSE(l.affords(0.0, 0.41));
  CHECK(l.affords(0.4, 0.4));
}
