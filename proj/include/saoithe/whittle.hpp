#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>

namespace saoithe {

/// Prices in force for one slot. The aggregated update cost is
/// lambda * carbon_cost(xi_t, e_tot) + mu * c_duty_frac.
struct IndexContext {
  double lambda = 0.0;
  double mu = 0.0;
  double xi_t = 0.0;         // gCO2/kWh
  double e_tot = 0.9251;     // J
  double c_duty_frac = 0.0;  // airtime per transmission, fraction of a slot

  /// Throws std::domain_error when a price or the intensity is negative.
  double cost() const;
};

// Urgency U(x) = (4x^3 + 9x^2 + 5x) / 6. The numerator is always divisible
// by 6 for integer x, so U is integral.

/// 6 * U(x), exact. Valid for 0 <= x <= 1.2e6.
std::int64_t urgency_times6(std::int64_t x);
/// U(x) as an exact integer.
std::int64_t urgency_exact(std::int64_t x);
/// U(x) in floating point, for the scheduler hot path.
double urgency(std::int64_t x);

/// W(aoi) = U(aoi) - cost.
double whittle_index(std::int64_t aoi, double cost);
double whittle_index(std::int64_t aoi, const IndexContext& ctx);
/// 6 * W in integers, for a cost already scaled by 6.
std::int64_t whittle_index_times6(std::int64_t aoi, std::int64_t cost_times6);

/// Differential index of a buffered packet: [U(aoi) - U(buf_age)] - cost.
/// Requires 0 < buf_age <= aoi.
double buffered_index(std::int64_t aoi, std::int64_t buf_age, double cost);
double buffered_index(std::int64_t aoi, std::int64_t buf_age, const IndexContext& ctx);

/// Smallest integer age with a strictly positive index.
std::int64_t critical_age(double cost);
std::int64_t critical_age(const IndexContext& ctx);

using UrgencyFn = std::function<double(std::int64_t)>;

struct IndexabilityReport {
  bool pass = true;
  std::size_t grid_points = 0;
  /// First subsidy at which a violation was seen.
  std::optional<double> violation_nu;
  /// "non_monotone": the optimal passive set shrank as the subsidy grew.
  /// "index_mismatch": the index-implied passive set disagrees with the
  /// renewal-optimal one.
  std::string violation_kind;
  std::int64_t violation_aoi = 0;
};

/// Sweeps the subsidy grid (which must be non-empty and increasing). For each
/// subsidy the renewal-optimal threshold over [1, aoi_range] gives the
/// passive set {aoi < H*}; the check requires those sets to nest as the
/// subsidy grows and to match {aoi : U_f(aoi) - cost < nu} where U_f is the
/// urgency under test.
IndexabilityReport indexability_check(double cost, std::int64_t aoi_range,
                                      std::span<const double> nu_grid,
                                      const UrgencyFn& urgency_under_test = urgency);

}  // namespace saoithe
