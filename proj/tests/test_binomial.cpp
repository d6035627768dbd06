#include <doctest.h>

#include <cmath>

#include "cascadelab/binomial.hpp"
#include "cascadelab/error.hpp"
#include "cascadelab/theory.hpp"

using namespace cascadelab;

TEST_CASE("bernoulli masses") {
  const BinomialParams p(0.25);
  CHECK(bernoulli_mass(p, NodePath{{1, 1, 1}}) == doctest::Approx(1.0 / 64.0));
  CHECK(bernoulli_mass(p, NodePath{{0, 1}}) == doctest::Approx(0.1875));
  CHECK(bernoulli_mass(p, NodePath{}) == 1.0);
  CHECK_THROWS_AS(bernoulli_mass(p, NodePath{{2}}), CascadeError);
  CHECK_THROWS_AS(BinomialParams(1.0), CascadeError);
  CHECK_THROWS_AS(BinomialParams(0.0), CascadeError);
}

TEST_CASE("binomial level matches the product formula") {
  const BinomialParams p(0.3);
  const LevelMassArray level = binomial_level(p, 9);
  double total = 0.0;
  for (std::size_t i = 0; i < level.size(); ++i) {
    const double m = std::exp(level.log_mass(i));
    CHECK(m == doctest::Approx(bernoulli_mass(p, level.path_of(i))).epsilon(1e-13));
    total += m;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("structure function and spectrum closed forms") {
  const BinomialParams p(0.25);
  CHECK(bernoulli_tau(p, 2.0) == doctest::Approx(std::log2(0.625)));
  CHECK(bernoulli_tau(p, 2.0) == doctest::Approx(-0.67807).epsilon(1e-5));
  CHECK(bernoulli_tau(p, 0.0) == 1.0);
  CHECK(bernoulli_tau(p, 1.0) == 0.0);
  CHECK(binary_entropy(0.25) == doctest::Approx(0.8112781244591328));
  CHECK(bernoulli_exponent(p, 0.5) == doctest::Approx(1.20752).epsilon(1e-5));
  CHECK(bernoulli_spectrum(p, 2.0) == doctest::Approx(0.0).scale(1.0));
  CHECK(bernoulli_spectrum(p, -std::log2(0.75)) == doctest::Approx(0.0).scale(1.0));
  CHECK(bernoulli_spectrum(p, bernoulli_exponent(p, 0.5)) == doctest::Approx(1.0));
  CHECK(bernoulli_spectrum(BinomialParams(0.5), 1.0) == 1.0);
  CHECK_THROWS_AS(bernoulli_spectrum(p, 2.1), CascadeError);
  CHECK_THROWS_AS(bernoulli_spectrum(BinomialParams(0.5), 1.1), CascadeError);
}

TEST_CASE("spectrum is the Legendre transform of tau") {
  const BinomialParams p(0.25);
  const WeightModel m = binomial_weight_model(p);
  const BranchingBase two(2);
  for (double q : {-3.0, -1.0, 0.0, 0.5, 2.0, 4.0}) CHECK(tau(m, two, q) == doctest::Approx(bernoulli_tau(p, q)));
  for (double theta = 0.05; theta < 1.0; theta += 0.1) {
    const double beta = bernoulli_exponent(p, theta);
    CHECK(legendre(m, two, beta) == doctest::Approx(bernoulli_spectrum(p, beta)).epsilon(1e-9));
  }
}

TEST_CASE("Gibbs measure identity") {
  const BinomialParams p(0.3);
  const double q = 2.0;
  const BinomialParams gibbs(gibbs_theta(p, q));
  CHECK(gibbs.p() == doctest::Approx(0.15517).epsilon(1e-4));
  const LevelMassArray level = binomial_level(p, 10);
  for (std::size_t i = 0; i < level.size(); ++i) {
    const NodePath path = level.path_of(i);
    const double rhs = std::pow(bernoulli_mass(p, path), q) * std::exp2(-10.0 * bernoulli_tau(p, q));
    CHECK(std::abs(bernoulli_mass(gibbs, path) - rhs) <= 1e-12);
  }
}
