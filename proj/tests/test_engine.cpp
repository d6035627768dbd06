#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "cascadelab/binomial.hpp"
#include "cascadelab/engine.hpp"
#include "cascadelab/error.hpp"
#include "cascadelab/rng.hpp"

using namespace cascadelab;

namespace {

const BranchingBase kTwo(2);
const BranchingBase kThree(3);

WeightModel unit_weight() { return validate(DiscreteAtoms{{{1.0, 1.0}}}); }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const CascadeError& e) {
    return e.code();
  }
  FAIL("expected a CascadeError");
  return ErrorCode::IoFailure;
}

}  // namespace

TEST_CASE("unit weights give Lebesgue measure exactly") {
  const LevelMassArray level = generate(CascadeConfig{kThree, 7, 1, 0}, unit_weight());
  CHECK(level.size() == 2187);
  for (double v : level.log_densities()) CHECK(v == 0.0);
  CHECK(total_mass(level) == 1.0);
  const MartingaleTrace t = martingale_trace(CascadeConfig{kTwo, 12, 1, 0}, unit_weight());
  for (double y : t.values) CHECK(y == 1.0);
}

TEST_CASE("generation is deterministic and worker independent") {
  const WeightModel m = validate(LogNormal{0.6});
  for (const auto& base : {kTwo, kThree}) {
    const CascadeConfig config{base, base.ell() == 2 ? 13 : 8, 17, 5};
    const LevelMassArray a = generate(config, m, 1);
    CHECK(a == generate(config, m, 1));
    CHECK(a == generate(config, m, 3));
    CHECK(a == generate(config, m, 8));
    const LevelMassArray other = generate(CascadeConfig{base, config.depth, 17, 6}, m, 1);
    CHECK_FALSE(a == other);
  }
  const WeightModel bd = validate(BirthDeath{0.7});
  const CascadeConfig config{kTwo, 12, 3, 2};
  CHECK(generate(config, bd, 1) == generate(config, bd, 5));
}

TEST_CASE("refine extends a level with the same node draws") {
  const WeightModel models[] = {validate(LogNormal{0.5}), validate(BirthDeath{0.75}),
                                validate(DiscreteAtoms{{{0.25, 0.5}, {1.75, 0.5}}})};
  for (const auto& m : models) {
    const LevelMassArray shallow = generate(CascadeConfig{kTwo, 9, 4, 1}, m);
    const LevelMassArray deep = generate(CascadeConfig{kTwo, 10, 4, 1}, m);
    CHECK(refine(shallow, m, 1) == deep);
    CHECK(refine(shallow, m, 4) == deep);
  }
}

TEST_CASE("cells agree with per-node weights") {
  const WeightModel m = validate(LogNormal{0.4});
  const CascadeConfig config{kThree, 4, 8, 3};
  const LevelMassArray level = generate(config, m);
  for (std::size_t i : {std::size_t{0}, std::size_t{17}, std::size_t{80}}) {
    const NodePath path = level.path_of(i);
    CHECK(level.index_of(path) == i);
    double ld = 0.0;
    NodePath prefix;
    for (int d : path.digits) {
      prefix.digits.push_back(d);
      ld += node_log_weight(config.seed, config.replica, prefix, m);
    }
    CHECK(level.log_density(i) == doctest::Approx(ld).epsilon(1e-13));
    CHECK(node_weight(config.seed, config.replica, prefix, m) ==
          doctest::Approx(std::exp(node_log_weight(config.seed, config.replica, prefix, m))));
  }
  CHECK(code_of([&] { node_log_weight(1, 0, NodePath{}, m); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("martingale trace matches materialized total mass") {
  const WeightModel models[] = {validate(LogNormal{0.7}), validate(BirthDeath{0.8})};
  for (const auto& m : models) {
    const MartingaleTrace t = martingale_trace(CascadeConfig{kTwo, 11, 21, 7}, m);
    REQUIRE(t.depth() == 11);
    for (int k = 1; k <= 11; ++k) {
      const double y = total_mass(generate(CascadeConfig{kTwo, k, 21, 7}, m));
      CHECK(t.values[static_cast<std::size_t>(k - 1)] == doctest::Approx(y).epsilon(1e-12));
    }
  }
}

TEST_CASE("weight sampler reproduces the weight laws") {
  // Frequencies of first-generation weights across many replicas.
  const WeightModel bd = validate(BirthDeath{0.3});
  int zeros = 0;
  constexpr int kReplicas = 40000;
  for (int r = 0; r < kReplicas; ++r) {
    if (node_weight(5, static_cast<std::uint64_t>(r), NodePath{{0}}, bd) == 0.0) ++zeros;
  }
  CHECK(std::abs(zeros / double(kReplicas) - 0.7) < 0.01);

  const WeightModel ln = validate(LogNormal{0.5});
  double sum = 0.0, sum_log = 0.0;
  for (int r = 0; r < kReplicas; ++r) {
    const double lw = node_log_weight(6, static_cast<std::uint64_t>(r), NodePath{{1}}, ln);
    sum += std::exp(lw);
    sum_log += lw;
  }
  CHECK(std::abs(sum / kReplicas - 1.0) < 0.015);
  CHECK(std::abs(sum_log / kReplicas + 0.125) < 0.01);

  const WeightSampler atoms(validate(DiscreteAtoms{{{0.5, 0.25}, {1.0, 0.25}, {1.25, 0.5}}}));
  CHECK(atoms.log_weight(0.1) == doctest::Approx(std::log(0.5)));
  CHECK(atoms.log_weight(0.4) == doctest::Approx(0.0));
  CHECK(atoms.log_weight(0.9) == doctest::Approx(std::log(1.25)));
  CHECK(WeightSampler(bd).log_weight(0.5) == -INFINITY);
}

TEST_CASE("cascade mean is one") {
  const WeightModel m = validate(LogNormal{std::sqrt(0.2 * std::log(2.0))});
  double sum = 0.0, sum2 = 0.0;
  constexpr int kReplicas = 4000;
  for (int r = 0; r < kReplicas; ++r) {
    const double y = martingale_trace(CascadeConfig{kTwo, 10, 99, static_cast<std::uint64_t>(r)}, m).final_mass();
    sum += y;
    sum2 += y * y;
  }
  const double mean = sum / kReplicas;
  const double se = std::sqrt((sum2 / kReplicas - mean * mean) / kReplicas);
  CHECK(std::abs(mean - 1.0) < 4.0 * se);
}

TEST_CASE("path sampler: uniform case") {
  const LevelMassArray level = generate(CascadeConfig{kTwo, 6, 1, 0}, unit_weight());
  const PathSampler sampler(level);
  std::vector<int> counts(64, 0);
  constexpr int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) ++counts[sampler.sample_index(derive_seed(3, 0, static_cast<std::uint64_t>(i)))];
  const double expected = kDraws / 64.0;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 103.4);  // df = 63, p = 0.001
}

TEST_CASE("path sampler: binomial digit frequency") {
  const LevelMassArray level = binomial_level(BinomialParams(0.25), 10);
  const PathSampler sampler(level);
  long ones = 0;
  constexpr int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) {
    const NodePath path = sampler.sample(derive_seed(8, 0, static_cast<std::uint64_t>(i)));
    for (int d : path.digits) ones += d;
  }
  CHECK(std::abs(ones / (10.0 * kDraws) - 0.25) < 0.005);
}

TEST_CASE("path sampler: degenerate levels") {
  std::vector<double> ld(27, -INFINITY);
  ld[13] = std::log(27.0);
  const LevelMassArray single(CascadeConfig{kThree, 3, 0, 0}, "{}", ld);
  for (std::uint64_t s = 0; s < 50; ++s) CHECK(sample_point(single, s) == single.path_of(13));

  const LevelMassArray empty(CascadeConfig{kThree, 3, 0, 0}, "{}", std::vector<double>(27, -INFINITY));
  CHECK(total_mass(empty) == 0.0);
  CHECK(code_of([&] { PathSampler s(empty); }) == ErrorCode::ZeroTotalMass);

  // Deterministic in the sample seed.
  const LevelMassArray level = generate(CascadeConfig{kTwo, 12, 2, 2}, validate(LogNormal{0.9}));
  CHECK(sample_point(level, 77) == sample_point(level, 77));
}

TEST_CASE("level array checks its zero mask") {
  std::vector<double> ld{0.0, -INFINITY};
  CHECK(code_of([&] {
          LevelMassArray bad(CascadeConfig{kTwo, 1, 0, 0}, "{}", ld, std::vector<std::uint8_t>{0, 0});
        }) == ErrorCode::InvalidParameter);
  const LevelMassArray ok(CascadeConfig{kTwo, 1, 0, 0}, "{}", ld, std::vector<std::uint8_t>{0, 1});
  CHECK(ok.is_zero(1));
  CHECK_FALSE(ok.is_zero(0));
  CHECK(ok.log_mass(0) == doctest::Approx(-std::log(2.0)));
}

TEST_CASE("depth cap") {
  CHECK(code_of([] { materialized_cells(kTwo, 28); }) == ErrorCode::DepthTooLarge);
  CHECK(materialized_cells(kTwo, 27) == (std::size_t{1} << 27));
  CHECK(code_of([] { generate(CascadeConfig{kThree, 20, 0, 0}, validate(LogNormal{0.5})); }) ==
        ErrorCode::DepthTooLarge);
  // Streaming traces have no cap.
  CHECK(martingale_trace(CascadeConfig{kTwo, 30, 0, 0}, validate(BirthDeath{0.55})).depth() == 30);
}

TEST_CASE("coupled cascade identities") {
  const WeightModel m = validate(LogNormal{0.6});
  const CascadeConfig config{kTwo, 10, 12, 4};
  const double q = 1.7;
  const CoupledCascade c = coupled_generate(config, m, q);
  CHECK(c.base_level == generate(config, m));
  const double shift = ln_moment(m, q);
  for (std::size_t i = 0; i < c.base_level.size(); i += 97) {
    CHECK(c.tilted_level.log_density(i) ==
          doctest::Approx(q * c.base_level.log_density(i) - config.depth * shift).epsilon(1e-12));
  }
  const CoupledCascade same = coupled_generate(config, m, 1.0);
  for (std::size_t i = 0; i < same.base_level.size(); ++i) {
    CHECK(same.tilted_level.log_density(i) == same.base_level.log_density(i));
  }
  const CoupledCascade flat = coupled_generate(config, m, 0.0);
  CHECK(total_mass(flat.tilted_level) == doctest::Approx(1.0).epsilon(1e-12));

  const WeightModel zero = validate(DiscreteAtoms{{{0.0, 0.5}, {2.0, 0.5}}});
  CHECK(code_of([&] { coupled_generate(config, zero, -1.0); }) == ErrorCode::MomentInfinite);
  const CoupledCascade ok = coupled_generate(config, zero, 2.0);
  for (std::size_t i = 0; i < ok.base_level.size(); ++i) CHECK(ok.base_level.is_zero(i) == ok.tilted_level.is_zero(i));
}

TEST_CASE("streamed partition sums match materialized levels") {
  const WeightModel models[] = {validate(LogNormal{0.7}), validate(BirthDeath{0.8})};
  const std::vector<double> qs{-1.5, 0.0, 0.5, 1.0, 2.5};
  for (const auto& m : models) {
    const CascadeConfig config{kThree, 7, 31, 1};
    const PartitionSums sums = stream_partition_sums(config, m, qs, 7);
    REQUIRE(sums.max_depth() == 7);
    for (int k = 1; k <= 7; ++k) {
      const LevelMassArray level = generate(CascadeConfig{kThree, k, 31, 1}, m);
      for (std::size_t i = 0; i < qs.size(); ++i) {
        const double expected = partition_log_sum(level, qs[i]);
        const double got = sums.log_sums[static_cast<std::size_t>(k - 1)][i];
        if (expected == -INFINITY) {
          CHECK(got == -INFINITY);
        } else {
          CHECK(got == doctest::Approx(expected).epsilon(1e-12).scale(1.0));
        }
      }
    }
  }
}
