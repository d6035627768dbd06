#pragma once

#include "cascadelab/engine.hpp"
#include "cascadelab/weight_model.hpp"

namespace cascadelab {

/// Deterministic binary cascade with m(I_eps) = p^{S_n} (1-p)^{n-S_n},
/// S_n the number of digit-1 entries. A digit 1 multiplies the parent mass
/// by p and a digit 0 by 1 - p (the opposite labelling gives the same
/// spectra).
class BinomialParams {
 public:
  explicit BinomialParams(double p);

  double p() const noexcept { return p_; }

 private:
  double p_;
};

double bernoulli_mass(const BinomialParams& params, const NodePath& path);

/// tau(q) = log2(p^q + (1-p)^q).
double bernoulli_tau(const BinomialParams& params, double q);

/// -(theta log2 theta + (1 - theta) log2(1 - theta)), 0 at the endpoints.
double binary_entropy(double theta);

/// Hoelder exponent of points whose digit-1 frequency is theta.
double bernoulli_exponent(const BinomialParams& params, double theta);

/// Spectrum F(beta) = h(theta(beta)). Throws BetaOutOfRange outside the
/// closed exponent interval between -log2 p and -log2(1-p).
double bernoulli_spectrum(const BinomialParams& params, double beta);

/// Parameter of the Gibbs measure at state q: p^q / (p^q + (1-p)^q).
double gibbs_theta(const BinomialParams& params, double q);

/// The depth-n binomial level as a LevelMassArray (descriptor kind "binomial").
LevelMassArray binomial_level(const BinomialParams& params, int depth);

/// Random weight law with the same structure function: W uniform on
/// {2p, 2(1-p)}, ell = 2.
WeightModel binomial_weight_model(const BinomialParams& params);

}  // namespace cascadelab
