#include "saoithe/traces.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace saoithe {

double CarbonTrace::mean() const {
  if (xi.empty()) return 0.0;
  return std::accumulate(xi.begin(), xi.end(), 0.0) / static_cast<double>(xi.size());
}

double CarbonTrace::min() const {
  return xi.empty() ? 0.0 : *std::min_element(xi.begin(), xi.end());
}

double CarbonTrace::max() const {
  return xi.empty() ? 0.0 : *std::max_element(xi.begin(), xi.end());
}

Region region_from_string(const std::string& s) {
  if (s == "low") return Region::low;
  if (s == "medium") return Region::medium;
  if (s == "high") return Region::high;
  throw std::invalid_argument("unknown region '" + s + "' (expected low|medium|high)");
}

const char* to_string(Region r) {
  switch (r) {
    case Region::low:
      return "low";
    case Region::medium:
      return "medium";
    case Region::high:
      return "high";
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\"");
  return s.substr(b, e - b + 1);
}

// Days since 1970-01-01 for a proleptic Gregorian date (H. Hinnant's algorithm).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

bool all_digits(const std::string& s) {
  const std::size_t start = (!s.empty() && s[0] == '-') ? 1 : 0;
  return s.size() > start &&
         std::all_of(s.begin() + static_cast<std::ptrdiff_t>(start), s.end(),
                     [](unsigned char c) { return std::isdigit(c) != 0; });
}

}  // namespace

std::int64_t parse_iso8601(const std::string& s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  int consumed = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d%n", &y, &mo, &d, &consumed) != 3 || consumed != 10) {
    throw TraceError("bad ISO-8601 date '" + s + "'");
  }
  std::size_t pos = 10;
  if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ')) {
    ++pos;
    int n = 0;
    if (std::sscanf(s.c_str() + pos, "%2d:%2d%n", &h, &mi, &n) != 2 || n != 5) {
      throw TraceError("bad ISO-8601 time in '" + s + "'");
    }
    pos += 5;
    if (pos < s.size() && s[pos] == ':') {
      if (std::sscanf(s.c_str() + pos, ":%2d%n", &sec, &n) != 1 || n != 3) {
        throw TraceError("bad ISO-8601 seconds in '" + s + "'");
      }
      pos += 3;
      if (pos < s.size() && s[pos] == '.') {
        ++pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
      }
    }
  }
  std::int64_t offset = 0;
  if (pos < s.size()) {
    if (s[pos] == 'Z' && pos + 1 == s.size()) {
      pos = s.size();
    } else if (s[pos] == '+' || s[pos] == '-') {
      int oh = 0, om = 0, n = 0;
      if (std::sscanf(s.c_str() + pos + 1, "%2d:%2d%n", &oh, &om, &n) != 2 || n != 5 ||
          pos + 6 != s.size()) {
        throw TraceError("bad ISO-8601 offset in '" + s + "'");
      }
      offset = (s[pos] == '+' ? 1 : -1) * (oh * 3600 + om * 60);
      pos = s.size();
    } else {
      throw TraceError("trailing characters in timestamp '" + s + "'");
    }
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60) {
    throw TraceError("timestamp field out of range in '" + s + "'");
  }
  return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 +
         h * 3600 + mi * 60 + sec - offset;
}

std::int64_t parse_timestamp(const std::string& s) {
  if (all_digits(s)) {
    return std::stoll(s);
  }
  return parse_iso8601(s);
}

RawCiSeries parse_ci_csv(const std::string& text) {
  RawCiSeries out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool seen_row = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw TraceError("line " + std::to_string(lineno) + ": expected 'timestamp,value'");
    }
    const std::string ts_field = trim(line.substr(0, comma));
    std::string rest = line.substr(comma + 1);
    if (auto c2 = rest.find(','); c2 != std::string::npos) rest.erase(c2);
    const std::string val_field = trim(rest);

    double value = 0.0;
    const bool numeric = parse_number(val_field, value);
    if (!seen_row && !numeric) {
      seen_row = true;  // header
      continue;
    }
    seen_row = true;
    if (!numeric) {
      throw TraceError("line " + std::to_string(lineno) + ": intensity '" + val_field +
                       "' is not a number");
    }
    if (value < 0.0) {
      throw TraceError("line " + std::to_string(lineno) + ": negative intensity");
    }
    std::int64_t ts = 0;
    try {
      ts = parse_timestamp(ts_field);
    } catch (const std::exception& e) {
      throw TraceError("line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!out.timestamps.empty() && ts <= out.timestamps.back()) {
      throw TraceError("line " + std::to_string(lineno) + ": timestamps must be strictly increasing");
    }
    out.timestamps.push_back(ts);
    out.values.push_back(value);
  }
  if (out.values.empty()) {
    throw TraceError("carbon-intensity file holds no samples");
  }
  return out;
}

RawCiSeries load_ci_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw TraceError("cannot open trace file " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_ci_csv(ss.str());
}

CarbonTrace resample_to_slots(const RawCiSeries& series, double slot_duration, int horizon,
                              std::int64_t start) {
  const auto& ts = series.timestamps;
  if (ts.size() != series.values.size()) {
    throw TraceError("timestamps and values differ in length");
  }
  if (ts.size() < 2) {
    throw TraceError("at least two samples are needed to infer their coverage");
  }
  if (!(slot_duration > 0.0) || horizon < 1) {
    throw TraceError("slot duration and horizon must be positive");
  }
  std::vector<std::int64_t> gaps(ts.size() - 1);
  for (std::size_t i = 1; i < ts.size(); ++i) gaps[i - 1] = ts[i] - ts[i - 1];
  std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2),
                   gaps.end());
  const double spacing = static_cast<double>(gaps[gaps.size() / 2]);

  const double end = static_cast<double>(start) + horizon * slot_duration;
  if (start < ts.front()) {
    throw TraceError("trace starts at " + std::to_string(ts.front()) +
                     ", after the requested start " + std::to_string(start));
  }
  if (end > static_cast<double>(ts.back()) + spacing) {
    throw TraceError("trace covers until " + std::to_string(ts.back() + static_cast<std::int64_t>(spacing)) +
                     ", horizon ends at " + std::to_string(static_cast<std::int64_t>(end)));
  }

  CarbonTrace out;
  out.slot_duration = slot_duration;
  out.region_label = "csv";
  out.xi.reserve(static_cast<std::size_t>(horizon));
  std::size_t j = 0;
  for (int s = 0; s < horizon; ++s) {
    const double t = static_cast<double>(start) + s * slot_duration;
    while (j + 1 < ts.size() && static_cast<double>(ts[j + 1]) <= t) ++j;
    if (t - static_cast<double>(ts[j]) >= 1.5 * spacing) {
      throw TraceError("coverage gap: no sample in [" + std::to_string(ts[j] + static_cast<std::int64_t>(spacing)) +
                       ", " + std::to_string(static_cast<std::int64_t>(t)) + "]");
    }
    out.xi.push_back(series.values[j]);
  }
  return out;
}

SyntheticTraceParams region_params(Region r) {
  // Minimum at 13:00 (solar peak), maximum twelve hours later.
  const double phase = 2.0 * std::numbers::pi * 5.0 / 24.0;
  switch (r) {
    case Region::low:
      return {30.0, 60.0, phase, 0.03};
    case Region::medium:
      return {90.0, 180.0, phase, 0.03};
    case Region::high:
      return {210.0, 420.0, phase, 0.03};
  }
  return {};
}

CarbonTrace synthetic_trace(const SyntheticTraceParams& p, int horizon, double slot_duration,
                            std::uint64_t seed, const std::string& label) {
  if (horizon < 1 || !(slot_duration > 0.0)) {
    throw TraceError("slot duration and horizon must be positive");
  }
  std::mt19937_64 rng(seed);
  CarbonTrace out;
  out.slot_duration = slot_duration;
  out.region_label = label;
  out.xi.reserve(static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t) {
    const double day_frac = t * slot_duration / 86400.0;
    const double shape = (1.0 + std::sin(2.0 * std::numbers::pi * day_frac + p.phase)) / 2.0;
    // Uniform multiplicative noise keeps the peak-to-trough ratio bounded.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const double noise = p.noise_sigma * (2.0 * u - 1.0);
    out.xi.push_back(std::max(0.0, (p.base + p.amplitude * shape) * (1.0 + noise)));
  }
  return out;
}

CarbonTrace synthetic_trace(Region region, int horizon, double slot_duration, std::uint64_t seed) {
  return synthetic_trace(region_params(region), horizon, slot_duration, seed, to_string(region));
}

CarbonTrace constant_trace(double xi, int horizon, double slot_duration) {
  if (xi < 0.0) {
    throw TraceError("intensity must be non-negative");
  }
  CarbonTrace out;
  out.xi.assign(static_cast<std::size_t>(horizon), xi);
  out.slot_duration = slot_duration;
  out.region_label = "constant";
  return out;
}

std::string format_trace_csv(const CarbonTrace& trace) {
  std::ostringstream os;
  os << "slot,xi\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.xi.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, trace.xi[i]);
    os << buf;
  }
  return os.str();
}

void write_trace_csv(const CarbonTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw TraceError("cannot write " + path.string());
  }
  out << format_trace_csv(trace);
}

}  // namespace saoithe
