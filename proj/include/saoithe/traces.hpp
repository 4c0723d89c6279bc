#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace saoithe {

class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Carbon intensity samples as published by grid-data providers.
struct RawCiSeries {
  std::vector<std::int64_t> timestamps;  // seconds since epoch, strictly increasing
  std::vector<double> values;            // gCO2/kWh
};

/// Per-slot carbon intensity for one episode.
struct CarbonTrace {
  std::vector<double> xi;  // gCO2/kWh, one per slot
  double slot_duration = 300.0;
  std::string region_label;

  int size() const { return static_cast<int>(xi.size()); }
  double mean() const;
  double min() const;
  double max() const;
};

enum class Region { low, medium, high };

Region region_from_string(const std::string& s);
const char* to_string(Region r);

/// Parses "timestamp,value" rows. Timestamps are ISO-8601
/// (YYYY-MM-DDTHH:MM[:SS][Z|+hh:mm]) or plain epoch seconds; a header line is
/// optional and blank lines are skipped.
RawCiSeries parse_ci_csv(const std::string& text);
RawCiSeries load_ci_csv(const std::filesystem::path& path);

/// Seconds since epoch for an ISO-8601 timestamp. Throws TraceError.
std::int64_t parse_iso8601(const std::string& s);
/// Epoch seconds as plain digits, otherwise ISO-8601.
std::int64_t parse_timestamp(const std::string& s);

/// Zero-order hold: each slot takes the latest sample at or before its start.
CarbonTrace resample_to_slots(const RawCiSeries& series, double slot_duration, int horizon,
                              std::int64_t start);

struct SyntheticTraceParams {
  double base = 0.0;         // gCO2/kWh at the daily minimum
  double amplitude = 0.0;    // peak-to-trough swing
  double phase = 0.0;        // radians
  double noise_sigma = 0.0;  // half-width of uniform multiplicative noise
};

/// Stand-in regional profiles with a 3:1 peak-to-trough ratio. Daily means
/// are about 60, 180 and 420 gCO2/kWh.
SyntheticTraceParams region_params(Region r);

/// base + amplitude * (1 + sin(2 pi t tau / 86400 + phase)) / 2, times
/// (1 + noise), clipped at zero.
CarbonTrace synthetic_trace(const SyntheticTraceParams& params, int horizon,
                            double slot_duration, std::uint64_t seed,
                            const std::string& label = "synthetic");
CarbonTrace synthetic_trace(Region region, int horizon, double slot_duration,
                            std::uint64_t seed);

/// Constant intensity for every slot.
CarbonTrace constant_trace(double xi, int horizon, double slot_duration);

/// "slot,xi" rows with a header.
std::string format_trace_csv(const CarbonTrace& trace);
void write_trace_csv(const CarbonTrace& trace, const std::filesystem::path& path);

}  // namespace saoithe
