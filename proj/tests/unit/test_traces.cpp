#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

#include "doctest.h"

#include "../support/gen.hpp"
#include "saoithe/reporting.hpp"
#include "saoithe/traces.hpp"

using namespace saoithe;

namespace {

std::string hourly_csv(int rows, double base = 100.0) {
  std::string out = "timestamp,carbon_intensity\n";
  for (int h = 0; h < rows; ++h) {
    const int day = 1 + h / 24;
    const int hour = h % 24;
    out += "2024-03-0" + std::to_string(day) + "T" + (hour < 10 ? "0" : "") +
           std::to_string(hour) + ":00:00Z," + std::to_string(base + h) + "\n";
  }
  return out;
}

}  // namespace

TEST_CASE("timestamps") {
  CHECK(parse_iso8601("1970-01-01T00:00:00Z") == 0);
  CHECK(parse_iso8601("2024-03-01T00:00Z") == 1709251200);
  CHECK(parse_iso8601("2024-03-01T02:00:00+02:00") == 1709251200);
  CHECK(parse_timestamp("1709251200") == 1709251200);
  CHECK_THROWS_AS(parse_iso8601("yesterday"), TraceError);
}

TEST_CASE("csv ingestion") {
  SUBCASE("24 hourly rows") {
    const RawCiSeries s = parse_ci_csv(hourly_csv(24));
    CHECK(s.values.size() == 24);
    CHECK(s.timestamps[1] - s.timestamps[0] == 3600);
  }
  SUBCASE("header optional and blank lines skipped") {
    const RawCiSeries s = parse_ci_csv("0,10\n\n3600,20\n");
    CHECK(s.values == std::vector<double>{10.0, 20.0});
  }
  SUBCASE("out of order") {
    CHECK_THROWS_AS(parse_ci_csv("3600,10\n0,20\n"), TraceError);
  }
  SUBCASE("negative intensity") {
    CHECK_THROWS_AS(parse_ci_csv("0,10\n3600,-1\n"), TraceError);
  }
  SUBCASE("malformed row names its line") {
    CHECK_THROWS_WITH_AS(parse_ci_csv("ts,ci\n0,10\n3600\n"), doctest::Contains("line 3"),
                         TraceError);
  }
  SUBCASE("empty") { CHECK_THROWS_AS(parse_ci_csv("timestamp,value\n"), TraceError); }
  SUBCASE("from disk") {
    const auto path = std::filesystem::temp_directory_path() / "saoithe_ci_test.csv";
    write_text_file(path, hourly_csv(5));
    CHECK(load_ci_csv(path).values.size() == 5);
    std::filesystem::remove(path);
    CHECK_THROWS(load_ci_csv(path));
  }
}

TEST_CASE("zero-order hold resampling") {
  const RawCiSeries hourly = parse_ci_csv(hourly_csv(25));
  const std::int64_t start = hourly.timestamps.front();
  SUBCASE("hourly to five minutes repeats each value twelve times") {
    const CarbonTrace tr = resample_to_slots(hourly, 300.0, 288, start);
    REQUIRE(tr.size() == 288);
    for (int t = 0; t < 288; ++t) CHECK(tr.xi[static_cast<std::size_t>(t)] == 100.0 + t / 12);
  }
  SUBCASE("constant series") {
    RawCiSeries c{{0, 3600, 7200}, {50.0, 50.0, 50.0}};
    const CarbonTrace tr = resample_to_slots(c, 300.0, 24, 0);
    CHECK(std::all_of(tr.xi.begin(), tr.xi.end(), [](double v) { return v == 50.0; }));
  }
  SUBCASE("too short for the horizon") {
    CHECK_THROWS_AS(resample_to_slots(hourly, 300.0, 400, start), TraceError);
  }
  SUBCASE("start before the first sample") {
    CHECK_THROWS_AS(resample_to_slots(hourly, 300.0, 12, start - 600), TraceError);
  }
  SUBCASE("gap in coverage") {
    RawCiSeries gap{{0, 3600, 4 * 3600, 5 * 3600}, {1.0, 2.0, 3.0, 4.0}};
    CHECK_THROWS_WITH_AS(resample_to_slots(gap, 300.0, 48, 0), doctest::Contains("gap"),
                         TraceError);
  }
}

TEST_CASE("property: resampling stays inside the raw range") {
  gen::Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    RawCiSeries s;
    const int n = gen::int_in(rng, 3, 60);
    std::int64_t t = gen::int_in(rng, 0, 100000);
    for (int i = 0; i < n; ++i) {
      s.timestamps.push_back(t);
      s.values.push_back(gen::real_in(rng, 0.0, 800.0));
      t += 900;
    }
    const int horizon = static_cast<int>((n - 1) * 900 / 300);
    const CarbonTrace tr = resample_to_slots(s, 300.0, horizon, s.timestamps.front());
    const auto [lo, hi] = std::minmax_element(s.values.begin(), s.values.end());
    CHECK(tr.min() >= *lo);
    CHECK(tr.max() <= *hi);
  }
}

TEST_CASE("synthetic regional traces") {
  for (Region r : {Region::low, Region::medium, Region::high}) {
    const CarbonTrace tr = synthetic_trace(r, 288, 300.0, 1);
    CHECK(tr.size() == 288);
    CHECK(tr.min() > 0.0);
    const double ratio = tr.max() / tr.min();
    CHECK(ratio >= 2.7);
    CHECK(ratio <= 3.3);
    CHECK(tr.region_label == to_string(r));
  }
  CHECK(synthetic_trace(Region::low, 288, 300.0, 1).mean() ==
        doctest::Approx(60.0).epsilon(0.05));
  CHECK(synthetic_trace(Region::medium, 288, 300.0, 1).mean() ==
        doctest::Approx(180.0).epsilon(0.05));
  CHECK(synthetic_trace(Region::high, 288, 300.0, 1).mean() ==
        doctest::Approx(420.0).epsilon(0.05));
  CHECK(region_from_string("high") == Region::high);
  CHECK_THROWS(region_from_string("arctic"));
}

TEST_CASE("synthetic trace determinism and shape") {
  const CarbonTrace a = synthetic_trace(Region::medium, 576, 300.0, 42);
  const CarbonTrace b = synthetic_trace(Region::medium, 576, 300.0, 42);
  CHECK(a.xi == b.xi);
  CHECK(a.xi != synthetic_trace(Region::medium, 576, 300.0, 43).xi);
  // Same time of day on consecutive days agrees up to the noise band.
  const double noise = region_params(Region::medium).noise_sigma;
  for (int t = 0; t < 288; ++t) {
    const double x = a.xi[static_cast<std::size_t>(t)];
    const double y = a.xi[static_cast<std::size_t>(t + 288)];
    CHECK(std::abs(x / y - 1.0) <= 2.0 * noise / (1.0 - noise) + 1e-12);
  }
  const CarbonTrace flat = synthetic_trace({75.0, 0.0, 0.0, 0.0}, 100, 300.0, 3);
  CHECK(std::all_of(flat.xi.begin(), flat.xi.end(), [](double v) { return v == 75.0; }));
}

TEST_CASE("trace export") {
  const CarbonTrace tr = constant_trace(42.0, 3, 300.0);
  CHECK(format_trace_csv(tr) == "slot,xi\n0,42\n1,42\n2,42\n");
}
