#include "cascadelab/binomial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cascadelab/error.hpp"

namespace cascadelab {

BinomialParams::BinomialParams(double p) : p_(p) {
  if (!(p > 0.0 && p < 1.0)) throw CascadeError(ErrorCode::InvalidParameter, "binomial p must lie in (0,1)");
}

double bernoulli_mass(const BinomialParams& params, const NodePath& path) {
  int ones = 0;
  for (int d : path.digits) {
    if (d != 0 && d != 1) throw CascadeError(ErrorCode::InvalidParameter, "binomial paths are binary");
    ones += d;
  }
  const int n = static_cast<int>(path.length());
  return std::pow(params.p(), ones) * std::pow(1.0 - params.p(), n - ones);
}

double bernoulli_tau(const BinomialParams& params, double q) {
  if (q == 1.0) return 0.0;
  return std::log2(std::pow(params.p(), q) + std::pow(1.0 - params.p(), q));
}

double binary_entropy(double theta) {
  if (theta <= 0.0 || theta >= 1.0) return 0.0;
  return -(theta * std::log2(theta) + (1.0 - theta) * std::log2(1.0 - theta));
}

double bernoulli_exponent(const BinomialParams& params, double theta) {
  return -(theta * std::log2(params.p()) + (1.0 - theta) * std::log2(1.0 - params.p()));
}

double bernoulli_spectrum(const BinomialParams& params, double beta) {
  const double lp = std::log2(params.p());
  const double lq = std::log2(1.0 - params.p());
  constexpr double kSlack = 1e-12;
  if (lq == lp) {
    if (std::abs(beta - 1.0) > kSlack) throw CascadeError(ErrorCode::BetaOutOfRange, "uniform measure has beta = 1 only");
    return 1.0;
  }
  double theta = (beta + lq) / (lq - lp);
  if (theta < -kSlack || theta > 1.0 + kSlack) {
    throw CascadeError(ErrorCode::BetaOutOfRange, "beta outside the binomial exponent interval");
  }
  theta = std::clamp(theta, 0.0, 1.0);
  return binary_entropy(theta);
}

double gibbs_theta(const BinomialParams& params, double q) {
  const double a = std::pow(params.p(), q);
  const double b = std::pow(1.0 - params.p(), q);
  return a / (a + b);
}

LevelMassArray binomial_level(const BinomialParams& params, int depth) {
  const BranchingBase base(2);
  const std::size_t cells = materialized_cells(base, depth);
  // Density factors: a digit-0 child keeps 2(1-p) of the parent density, digit 1 keeps 2p.
  const double log_factor[2] = {std::log(2.0 * (1.0 - params.p())), std::log(2.0 * params.p())};
  std::vector<double> values{0.0};
  values.reserve(cells);
  for (int k = 0; k < depth; ++k) {
    std::vector<double> next(values.size() * 2);
    for (std::size_t i = 0; i < values.size(); ++i) {
      next[2 * i] = values[i] + log_factor[0];
      next[2 * i + 1] = values[i] + log_factor[1];
    }
    values = std::move(next);
  }
  nlohmann::json descriptor{{"kind", "binomial"}, {"p", params.p()}};
  return LevelMassArray(CascadeConfig{base, depth, 0, 0}, descriptor.dump(), std::move(values));
}

WeightModel binomial_weight_model(const BinomialParams& params) {
  return validate(DiscreteAtoms{{{2.0 * params.p(), 0.5}, {2.0 * (1.0 - params.p()), 0.5}}});
}

}  // namespace cascadelab
