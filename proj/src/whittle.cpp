#include "saoithe/whittle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "saoithe/core_model.hpp"
#include "saoithe/oracle.hpp"

namespace saoithe {

double IndexContext::cost() const {
  if (!(lambda >= 0.0) || !(mu >= 0.0)) {
    throw std::domain_error("shadow prices must be non-negative");
  }
  return lambda * carbon_cost(xi_t, e_tot) + mu * c_duty_frac;
}

std::int64_t urgency_times6(std::int64_t x) {
  if (x < 0) {
    throw std::domain_error("urgency is defined for non-negative ages");
  }
  if (x > 1'200'000) {
    throw std::overflow_error("urgency argument too large for 64-bit evaluation");
  }
  return ((4 * x + 9) * x + 5) * x;
}

std::int64_t urgency_exact(std::int64_t x) { return urgency_times6(x) / 6; }

double urgency(std::int64_t x) {
  if (x < 0) {
    throw std::domain_error("urgency is defined for non-negative ages");
  }
  const double d = static_cast<double>(x);
  return ((4.0 * d + 9.0) * d + 5.0) * d / 6.0;
}

double whittle_index(std::int64_t aoi, double cost) { return urgency(aoi) - cost; }

double whittle_index(std::int64_t aoi, const IndexContext& ctx) {
  return whittle_index(aoi, ctx.cost());
}

std::int64_t whittle_index_times6(std::int64_t aoi, std::int64_t cost_times6) {
  return urgency_times6(aoi) - cost_times6;
}

double buffered_index(std::int64_t aoi, std::int64_t buf_age, double cost) {
  if (buf_age <= 0) {
    throw std::domain_error("buffered index needs a non-empty buffer");
  }
  if (buf_age > aoi) {
    throw std::domain_error("buffered packet cannot be staler than the delivered state");
  }
  return (urgency(aoi) - urgency(buf_age)) - cost;
}

double buffered_index(std::int64_t aoi, std::int64_t buf_age, const IndexContext& ctx) {
  return buffered_index(aoi, buf_age, ctx.cost());
}

std::int64_t critical_age(double cost) {
  if (std::isnan(cost)) {
    throw std::domain_error("cost is NaN");
  }
  if (cost < 0.0) {
    return 1;
  }
  // U(x) <= 3x^3 for x >= 1, so any x with 3x^3 <= cost has U(x) <= cost and
  // lies below the boundary; the search starts there.
  auto x = static_cast<std::int64_t>(std::floor(std::cbrt(cost / 3.0)));
  x = std::max<std::int64_t>(1, x - 1);
  const long double c = cost;
  auto u = [](std::int64_t v) {
    const long double d = static_cast<long double>(v);
    return ((4.0L * d + 9.0L) * d + 5.0L) * d / 6.0L;
  };
  while (u(x) - c <= 0.0L) {
    ++x;
  }
  return x;
}

std::int64_t critical_age(const IndexContext& ctx) { return critical_age(ctx.cost()); }

IndexabilityReport indexability_check(double cost, std::int64_t aoi_range,
                                      std::span<const double> nu_grid,
                                      const UrgencyFn& urgency_under_test) {
  if (nu_grid.empty()) {
    throw std::invalid_argument("subsidy grid must be non-empty");
  }
  if (aoi_range < 2) {
    throw std::invalid_argument("aoi range must be at least 2");
  }
  for (std::size_t i = 1; i < nu_grid.size(); ++i) {
    if (!(nu_grid[i] > nu_grid[i - 1])) {
      throw std::invalid_argument("subsidy grid must be strictly increasing");
    }
  }

  IndexabilityReport report;
  report.grid_points = nu_grid.size();
  std::int64_t prev_threshold = 0;
  for (std::size_t i = 0; i < nu_grid.size(); ++i) {
    const double nu = nu_grid[i];
    const std::int64_t h = optimal_threshold(nu, cost, aoi_range).threshold;
    // Passive set is {1, ..., h-1}; nesting means h never decreases.
    if (h < prev_threshold) {
      report.pass = false;
      report.violation_nu = nu;
      report.violation_kind = "non_monotone";
      report.violation_aoi = h;
      return report;
    }
    prev_threshold = h;
    // The boundary age aoi_range is not decidable inside the truncated range.
    for (std::int64_t a = 1; a < aoi_range; ++a) {
      const bool optimal_passive = a < h;
      const bool index_passive = urgency_under_test(a) - cost < nu;
      if (optimal_passive != index_passive) {
        report.pass = false;
        report.violation_nu = nu;
        report.violation_kind = "index_mismatch";
        report.violation_aoi = a;
        return report;
      }
    }
  }
  return report;
}

}  // namespace saoithe
