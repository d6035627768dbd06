#include "cascadelab/inequalities.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cascadelab {

double two_term_power_gap(double x, double y, double q) {
  return std::pow(x, q) + q * std::pow(y, q) - std::pow(x + y, q);
}

double two_term_power_scale(double x, double y, double q) { return std::pow(x + y, q); }

double pairwise_power_gap(std::span<const double> x, double q) {
  const double total = std::accumulate(x.begin(), x.end(), 0.0);
  double powers = 0.0;
  double cross = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    powers += std::pow(x[i], q);
    for (std::size_t j = i + 1; j < x.size(); ++j) cross += std::pow(x[i] * x[j], q / 2.0);
  }
  return std::pow(total, q) - powers + 2.0 * (1.0 - q) * cross;
}

double pairwise_power_scale(std::span<const double> x, double q) {
  double powers = 0.0;
  for (double v : x) powers += std::pow(v, q);
  return std::max(powers, std::pow(std::accumulate(x.begin(), x.end(), 0.0), q));
}

}  // namespace cascadelab
