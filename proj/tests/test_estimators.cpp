#include <doctest.h>

#include <cmath>
#include <vector>

#include "cascadelab/binomial.hpp"
#include "cascadelab/engine.hpp"
#include "cascadelab/error.hpp"
#include "cascadelab/estimators.hpp"
#include "cascadelab/rng.hpp"
#include "cascadelab/theory.hpp"

using namespace cascadelab;

namespace {

const BranchingBase kTwo(2);

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const CascadeError& e) {
    return e.code();
  }
  FAIL("expected a CascadeError");
  return ErrorCode::IoFailure;
}

double log_choose(int n, int k) { return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0); }

MartingaleTrace constant_trace(int depth, double y) { return MartingaleTrace{std::vector<double>(depth, y)}; }

}  // namespace

TEST_CASE("empirical tau on oracle levels") {
  const BinomialParams p(0.25);
  const std::vector<double> qs{-2.0, -1.0, 0.0, 0.5, 1.0, 2.0, 3.0};
  for (int n : {1, 5, 12, 16}) {
    const StructureFunctionTable t = empirical_tau(binomial_level(p, n), qs);
    CHECK(t.kind == TableKind::Empirical);
    CHECK(t.depth == n);
    for (std::size_t i = 0; i < qs.size(); ++i) CHECK(std::abs(t.values[i] - bernoulli_tau(p, qs[i])) <= 1e-12);
  }
  const StructureFunctionTable flat = empirical_tau(
      generate(CascadeConfig{kTwo, 8, 0, 0}, validate(DiscreteAtoms{{{1.0, 1.0}}})), qs);
  for (std::size_t i = 0; i < qs.size(); ++i) CHECK(flat.values[i] == doctest::Approx(1.0 - qs[i]).epsilon(1e-15));

  const LevelMassArray empty(CascadeConfig{kTwo, 2, 0, 0}, "{}", std::vector<double>(4, -INFINITY));
  CHECK(code_of([&] { empirical_tau(empty, qs); }) == ErrorCode::AllMassZero);
}

TEST_CASE("streamed empirical tau equals materialized") {
  const WeightModel m = validate(LogNormal{0.6});
  const std::vector<double> qs{-1.0, 0.5, 2.0};
  const PartitionSums sums = stream_partition_sums(CascadeConfig{kTwo, 10, 3, 3}, m, qs, 10);
  const StructureFunctionTable a = empirical_tau(sums, 10);
  const StructureFunctionTable b = empirical_tau(generate(CascadeConfig{kTwo, 10, 3, 3}, m), qs);
  for (std::size_t i = 0; i < qs.size(); ++i) CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-12));
}

TEST_CASE("local exponents") {
  const LevelMassArray level = binomial_level(BinomialParams(0.25), 10);
  CHECK(local_exponent(level, NodePath{std::vector<int>(10, 1)}) == doctest::Approx(2.0).epsilon(1e-14));
  std::vector<int> half(10, 0);
  for (int i = 0; i < 5; ++i) half[static_cast<std::size_t>(2 * i)] = 1;
  CHECK(local_exponent(level, NodePath{half}) == doctest::Approx(1.20752).epsilon(1e-5));
  const LevelMassArray flat = generate(CascadeConfig{kTwo, 9, 0, 0}, validate(DiscreteAtoms{{{1.0, 1.0}}}));
  for (std::size_t i = 0; i < flat.size(); ++i) CHECK(local_exponent_at(flat, i) == 1.0);
  const LevelMassArray holes = generate(CascadeConfig{kTwo, 8, 2, 0}, validate(BirthDeath{0.5}));
  for (std::size_t i = 0; i < holes.size(); ++i) {
    if (holes.is_zero(i)) {
      CHECK(code_of([&] { local_exponent_at(holes, i); }) == ErrorCode::ZeroMassPath);
      break;
    }
  }
}

TEST_CASE("coarse spectrum equals the binomial counting oracle") {
  const BinomialParams p(0.25);
  const double lp = std::log2(0.25), lq = std::log2(0.75);
  for (int n : {8, 12, 16}) {
    const LevelMassArray level = binomial_level(p, n);
    const double spacing = (lq - lp) / n;
    const double eps = 0.3 * spacing;
    std::vector<double> betas;
    for (int k = 0; k <= n; ++k) betas.push_back(-(k * lp + (n - k) * lq) / n);
    betas.push_back(betas[3] + 0.5 * spacing);  // between two lattice points
    const SpectrumEstimate s = coarse_spectrum(level, betas, eps);
    for (int k = 0; k <= n; ++k) {
      CHECK(s.values[static_cast<std::size_t>(k)] ==
            doctest::Approx(log_choose(n, k) / (n * std::log(2.0))).epsilon(1e-12).scale(1.0));
    }
    CHECK(s.values.back() == -INFINITY);

    // A window holding two lattice points counts both.
    const SpectrumEstimate wide = coarse_spectrum(level, std::vector<double>{betas[4] + 0.5 * spacing}, 0.6 * spacing);
    const double both = std::log(std::exp(log_choose(n, 4)) + std::exp(log_choose(n, 5)));
    CHECK(wide.values[0] == doctest::Approx(both / (n * std::log(2.0))).epsilon(1e-12));
  }
  // The apex value approaches h(1/2) = 1 from below as n grows.
  double previous_gap = INFINITY;
  for (int n : {8, 12, 16, 20}) {
    const double apex = log_choose(n, n / 2) / (n * std::log(2.0));
    const double gap = 1.0 - apex;
    CHECK(gap > 0.0);
    CHECK(gap < previous_gap);
    previous_gap = gap;
  }
  CHECK(code_of([] { coarse_spectrum(binomial_level(BinomialParams(0.25), 4), std::vector<double>{1.0}, 0.0); }) ==
        ErrorCode::InvalidParameter);
}

TEST_CASE("Legendre spectrum of an analytic table") {
  const BinomialParams p(0.25);
  const WeightModel m = binomial_weight_model(p);
  std::vector<double> qs;
  for (int i = -120; i <= 120; ++i) qs.push_back(0.05 * i);
  const SpectrumEstimate s = legendre_spectrum(analytic_tau_table(m, kTwo, qs));
  CHECK(s.kind == SpectrumKind::Legendre);
  CHECK_FALSE(s.convexified);
  for (std::size_t i = 1; i < s.beta_grid.size(); ++i) CHECK(s.beta_grid[i] > s.beta_grid[i - 1]);
  for (double beta : {0.6, 1.0, 1.2075, 1.6}) {
    CHECK(interpolate_spectrum(s, beta) == doctest::Approx(bernoulli_spectrum(p, beta)).epsilon(2e-3));
  }
  CHECK(interpolate_spectrum(s, 5.0) == -INFINITY);

  // Lognormal: discrete transform at the chord slopes matches tau*.
  const WeightModel ln = validate(LogNormal{std::sqrt(0.5 * std::log(2.0))});
  std::vector<double> q2;
  for (int i = -40; i <= 40; ++i) q2.push_back(0.05 * i);
  const SpectrumEstimate s2 = legendre_spectrum(analytic_tau_table(ln, kTwo, q2));
  for (std::size_t i = 0; i < s2.beta_grid.size(); ++i) {
    CHECK(s2.values[i] == doctest::Approx(legendre(ln, kTwo, s2.beta_grid[i])).epsilon(2e-3).scale(1.0));
  }
}

TEST_CASE("Legendre spectrum projects noisy tables") {
  StructureFunctionTable t;
  t.kind = TableKind::Empirical;
  t.q_grid = {-1.0, 0.0, 1.0, 2.0, 3.0};
  t.values = {2.0, 1.0, 0.0, -0.2, -1.5};  // chord slopes -1, -1, -0.2, -1.3: not monotone
  const SpectrumEstimate s = legendre_spectrum(t);
  CHECK(s.convexified);
  for (std::size_t i = 1; i < s.beta_grid.size(); ++i) CHECK(s.beta_grid[i] > s.beta_grid[i - 1]);
  for (double v : s.values) CHECK(std::isfinite(v));

  StructureFunctionTable tiny{{0.0, 1.0}, {1.0, 0.0}, TableKind::Analytic, std::nullopt};
  CHECK(code_of([&] { legendre_spectrum(tiny); }) == ErrorCode::DegenerateGrid);
}

TEST_CASE("dimension estimates") {
  const LevelMassArray flat = generate(CascadeConfig{kTwo, 10, 0, 0}, validate(DiscreteAtoms{{{1.0, 1.0}}}));
  const ExponentEstimate e = dimension_estimate(flat, 50, 1);
  CHECK(e.mean == 1.0);
  CHECK(e.standard_error == 0.0);
  CHECK(e.sample_count == 50);
  CHECK(code_of([&] { dimension_estimate(flat, 1, 1); }) == ErrorCode::InvalidParameter);

  const ExponentEstimate b = dimension_estimate(binomial_level(BinomialParams(0.25), 16), 1000, 4);
  CHECK(std::abs(b.mean - binary_entropy(0.25)) < 0.02);

  const LevelMassArray empty(CascadeConfig{kTwo, 2, 0, 0}, "{}", std::vector<double>(4, -INFINITY));
  CHECK(code_of([&] { dimension_estimate(empty, 10, 1); }) == ErrorCode::ZeroTotalMass);
}

TEST_CASE("simultaneous exponent reduces to the dimension at q = 1") {
  const WeightModel m = validate(LogNormal{0.6});
  const CascadeConfig config{kTwo, 12, 5, 0};
  const ExponentEstimate a = simultaneous_exponent(coupled_generate(config, m, 1.0), 100, 9);
  const ExponentEstimate b = dimension_estimate(generate(config, m), 100, 9);
  CHECK(a.mean == b.mean);
  CHECK(a.standard_error == b.standard_error);
}

TEST_CASE("simultaneous exponent at q = 0 samples Lebesgue cells") {
  // Target 1 - E[log2 W] = 1 + sigma^2 / (2 ln 2) = 1.25.
  const WeightModel m = validate(LogNormal{std::sqrt(0.5 * std::log(2.0))});
  std::vector<ExponentEstimate> per;
  for (std::uint64_t r = 0; r < 20; ++r) {
    per.push_back(simultaneous_exponent(coupled_generate(CascadeConfig{kTwo, 14, 6, r}, m, 0.0), 200,
                                        derive_seed(6, r, 0)));
  }
  CHECK(std::abs(pool_replicas(per).mean - 1.25) < 0.05);
}

TEST_CASE("replica pooling weights by total mass") {
  const std::vector<ExponentEstimate> reps{{0.7, 0.01, 100, 2.0}, {0.9, 0.01, 100, 0.5}, {0.8, 0.02, 100, 1.5}};
  const ExponentEstimate p = pool_replicas(reps);
  CHECK(p.mean == doctest::Approx((0.7 * 2.0 + 0.9 * 0.5 + 0.8 * 1.5) / 4.0));
  CHECK(p.sample_count == 300);
  const double mu = p.mean;
  const double ss = 4.0 * (0.7 - mu) * (0.7 - mu) + 0.25 * (0.9 - mu) * (0.9 - mu) + 2.25 * (0.8 - mu) * (0.8 - mu);
  CHECK(p.standard_error == doctest::Approx(std::sqrt(ss * 1.5) / 4.0));

  const std::vector<ExponentEstimate> equal{{0.7, 0.01, 100, 1.0}, {0.9, 0.01, 100, 1.0}};
  CHECK(pool_replicas(equal).mean == doctest::Approx(0.8));
  const std::vector<ExponentEstimate> dead{{0.7, 0.01, 100, 0.0}};
  CHECK(code_of([&] { pool_replicas(dead); }) == ErrorCode::ZeroTotalMass);
}

TEST_CASE("mass statistics") {
  const std::vector<MartingaleTrace> traces{constant_trace(3, 0.5), constant_trace(3, 1.5), constant_trace(3, 0.0),
                                            constant_trace(3, 2.0), constant_trace(3, 1e-9)};
  const MassStatistics s1 = mass_statistics(traces, 1.0, 1e-6);
  CHECK(s1.replica_count == 5);
  CHECK(s1.mean == doctest::Approx((0.5 + 1.5 + 0.0 + 2.0 + 1e-9) / 5.0));
  CHECK(s1.exact_zero_count == 1);
  CHECK(s1.below_threshold_count == 1);
  CHECK(s1.extinct_fraction == doctest::Approx(0.4));
  CHECK(s1.depth == 3);
  const double mean = s1.mean;
  double ss = 0.0;
  for (double y : {0.5, 1.5, 0.0, 2.0, 1e-9}) ss += (y - mean) * (y - mean);
  CHECK(s1.variance == doctest::Approx(ss / 4.0));
  CHECK(s1.standard_error == doctest::Approx(std::sqrt(ss / 4.0 / 5.0)));

  const MassStatistics neg = mass_statistics(traces, -1.0, 0.0);
  CHECK(neg.replica_count == 4);
  CHECK(neg.excluded_count == 1);
  CHECK(neg.mean == doctest::Approx((2.0 + 1.0 / 1.5 + 0.5 + 1e9) / 4.0));

  const std::vector<MartingaleTrace> one{constant_trace(3, 1.0)};
  CHECK(code_of([&] { mass_statistics(one, 1.0, 0.0); }) == ErrorCode::InsufficientReplicas);
}

TEST_CASE("degeneracy probe preconditions and clear cases") {
  std::vector<MartingaleTrace> few(50, constant_trace(10, 1.0));
  CHECK(code_of([&] { degeneracy_probe(few, kTwo); }) == ErrorCode::InsufficientData);
  std::vector<MartingaleTrace> shallow(200, constant_trace(6, 1.0));
  CHECK(code_of([&] { degeneracy_probe(shallow, kTwo); }) == ErrorCode::InsufficientData);

  // Median decaying like 2^{-k/4}: degenerate. Flat median with jitter: nondegenerate.
  std::vector<MartingaleTrace> decaying, flat;
  for (int r = 0; r < 200; ++r) {
    MartingaleTrace d, f;
    for (int k = 1; k <= 16; ++k) {
      const double jitter = 1.0 + 0.01 * std::sin(r * 1.7 + k * 2.3);
      d.values.push_back(std::exp2(-0.25 * k) * (0.5 + r / 200.0) * jitter);
      f.values.push_back((0.5 + r / 200.0) * (k % 2 == 0 ? 1.01 : 0.99));
    }
    decaying.push_back(d);
    flat.push_back(f);
  }
  CHECK(degeneracy_probe(decaying, kTwo).verdict == Verdict::Degenerate);
  CHECK(degeneracy_probe(decaying, kTwo).slope == doctest::Approx(-0.25 * std::log(2.0)).epsilon(0.02));
  CHECK(degeneracy_probe(flat, kTwo).verdict == Verdict::Nondegenerate);

  std::vector<MartingaleTrace> extinct(150, constant_trace(10, 0.0));
  CHECK(degeneracy_probe(extinct, kTwo).verdict == Verdict::Inconclusive);
  CHECK(to_string(Verdict::Degenerate) == "degenerate");
}

TEST_CASE("negative moment probe") {
  const WeightModel ln = validate(LogNormal{0.5});
  std::vector<MartingaleTrace> traces;
  for (std::uint64_t r = 0; r < 300; ++r) traces.push_back(martingale_trace(CascadeConfig{kTwo, 10, 8, r}, ln));
  const std::vector<double> alphas{0.5, 1.0, 2.0};
  const auto rows = negative_moment_probe(traces, alphas, ln);
  REQUIRE(rows.size() == 3);
  for (const auto& row : rows) {
    double expected = 0.0;
    for (const auto& t : traces) expected += std::pow(t.final_mass(), -row.alpha);
    CHECK(row.mean == doctest::Approx(expected / 300.0));
    CHECK(row.finite);
  }
  const WeightModel bd = validate(BirthDeath{0.8});
  CHECK(code_of([&] { negative_moment_probe(traces, alphas, bd); }) == ErrorCode::ZeroMassEncountered);
  traces.push_back(constant_trace(10, 0.0));
  CHECK(code_of([&] { negative_moment_probe(traces, alphas, ln); }) == ErrorCode::ZeroMassEncountered);

  // One replica dominating the sum is flagged.
  std::vector<MartingaleTrace> spiky(200, constant_trace(10, 1.0));
  spiky[7] = constant_trace(10, 1e-6);
  CHECK_FALSE(negative_moment_probe(spiky, std::vector<double>{1.0}, ln)[0].finite);
}
