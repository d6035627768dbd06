#pragma once

#include <span>

namespace cascadelab {

/// x^q + q y^q - (x + y)^q, nonnegative for 0 < y <= x and 0 < q < 1.
double two_term_power_gap(double x, double y, double q);

/// (sum x_j)^q - sum x_j^q + 2 (1 - q) sum_{i<j} (x_i x_j)^{q/2},
/// nonnegative for x_j >= 0 and 0 < q <= 1.
double pairwise_power_gap(std::span<const double> x, double q);

/// Largest term entering the gap, used to scale a rounding allowance.
double two_term_power_scale(double x, double y, double q);
double pairwise_power_scale(std::span<const double> x, double q);

}  // namespace cascadelab
