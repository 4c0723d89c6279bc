#include <cmath>
#include <filesystem>
#include <limits>

#include "doctest.h"

#include "../support/gen.hpp"
#include "saoithe/config_io.hpp"

using namespace saoithe;

TEST_CASE("config text round-trips") {
  const SimConfig c = default_config();
  CHECK(parse_config(format_config(c)) == c);
  CHECK(format_config(c) == format_config(parse_config(format_config(c))));
}

TEST_CASE("random configs round-trip exactly") {
  gen::Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    SimConfig c = default_config();
    c.horizon_slots = gen::int_in(rng, 1, 5000);
    c.slot_duration = gen::real_in(rng, 1.0, 3600.0);
    c.num_sources = gen::int_in(rng, 1, 1000);
    c.channel_capacity = gen::int_in(rng, 1, 50);
    c.cf_budget = gen::real_in(rng, 0.0, 100.0);
    c.cf_budget_unit_updates = gen::coin(rng) ? 0.0 : gen::real_in(rng, 1.0, 50.0);
    c.duty_budget = gen::real_in(rng, 1e-4, 1.0);
    c.duty_cost_per_tx = gen::real_in(rng, 0.0, 3.0);
    c.aoi_cap = gen::int_in(rng, 3, 1000);
    c.tx_duration_slots = gen::int_in(rng, 1, 4);
    c.attribution = gen::coin(rng) ? EnergyAttribution::single : EnergyAttribution::staged;
    c.rng_seed = rng();
    if (gen::coin(rng)) {
      c.energy.components.reset();
      c.attribution = EnergyAttribution::single;
      c.energy.e_tot_per_update = gen::real_in(rng, 0.01, 5.0);
    }
    CHECK(parse_config(format_config(c)) == c);
  }
}

TEST_CASE("config parsing") {
  SUBCASE("comments and blank lines") {
    const SimConfig c = parse_config("# header\n\nnum_sources = 7   # trailing\n");
    CHECK(c.num_sources == 7);
    CHECK(c.horizon_slots == default_config().horizon_slots);
  }
  SUBCASE("unknown key") { CHECK_THROWS_AS(parse_config("bogus = 1\n"), std::invalid_argument); }
  SUBCASE("missing equals") { CHECK_THROWS_AS(parse_config("num_sources 5\n"), std::invalid_argument); }
  SUBCASE("bad number") { CHECK_THROWS_AS(parse_config("num_sources = 5x\n"), std::invalid_argument); }
  SUBCASE("components can be switched off") {
    const SimConfig c = parse_config("energy_components = none\n");
    CHECK_FALSE(c.energy.components.has_value());
  }
}

TEST_CASE("fmt_double is shortest round-trip") {
  CHECK(fmt_double(21.5) == "21.5");
  CHECK(fmt_double(0.1) == "0.1");
  CHECK(fmt_double(300.0) == "300");
  gen::Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const double v = gen::log_uniform(rng, 1e-12, 1e12);
    CHECK(std::strtod(fmt_double(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("config files") {
  const auto path = std::filesystem::temp_directory_path() / "saoithe_cfg_test.conf";
  SimConfig c = default_config();
  c.num_sources = 13;
  save_config(c, path);
  CHECK(load_config(path) == c);
  std::filesystem::remove(path);
  CHECK_THROWS(load_config(path));
}
