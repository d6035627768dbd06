#include "cascadelab/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>

#include "cascadelab/binomial.hpp"
#include "cascadelab/engine.hpp"
#include "cascadelab/error.hpp"
#include "cascadelab/estimators.hpp"
#include "cascadelab/inequalities.hpp"
#include "cascadelab/parallel.hpp"
#include "cascadelab/rng.hpp"
#include "cascadelab/snapshot.hpp"
#include "cascadelab/theory.hpp"

namespace cascadelab {

namespace {

std::string printf_string(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

struct Outcome {
  bool passed = false;
  std::string detail;
};

// Quick mode only thins the replica-heavy criteria (3 to 6); the others
// already run in seconds and keep their full sizes and tolerances.
struct Context {
  bool quick = false;
  unsigned workers = 1;

  std::size_t replicas(std::size_t full) const { return quick ? std::max<std::size_t>(full / 10, 1) : full; }
  double widen() const { return quick ? std::sqrt(10.0) : 1.0; }
};

const BranchingBase kBinary(2);

WeightModel lognormal_sigma2(double sigma2) { return validate(LogNormal{std::sqrt(sigma2)}); }

double equal_weight_mean(std::span<const ExponentEstimate> replicas) {
  double sum = 0.0;
  for (const auto& r : replicas) sum += r.mean;
  return sum / static_cast<double>(replicas.size());
}

std::vector<MartingaleTrace> replica_traces(const WeightModel& model, int depth, std::size_t replicas,
                                            std::uint64_t seed, unsigned workers) {
  std::vector<MartingaleTrace> traces(replicas);
  parallel_for(replicas, workers, [&](std::size_t r) {
    traces[r] = martingale_trace(CascadeConfig{kBinary, depth, seed, r}, model);
  });
  return traces;
}

Outcome binomial_exactness(const Context&) {
  const BinomialParams params(0.25);
  const LevelMassArray level = binomial_level(params, 12);
  const std::vector<double> qs{-2.0, -1.0, 0.0, 0.5, 1.0, 2.0, 3.0};
  const StructureFunctionTable table = empirical_tau(level, qs);
  double worst = 0.0;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    worst = std::max(worst, std::abs(table.values[i] - bernoulli_tau(params, qs[i])));
  }
  return {worst <= 1e-12, printf_string("max |tau~ - tau| = %.3e (tol 1e-12)", worst)};
}

Outcome gibbs_identity(const Context&) {
  const BinomialParams params(0.3);
  constexpr double q = 2.0;
  constexpr int n = 10;
  const double theta = gibbs_theta(params, q);
  const BinomialParams gibbs(theta);
  const LevelMassArray level = binomial_level(params, n);
  const double scale = std::exp2(-n * bernoulli_tau(params, q));
  double worst = 0.0;
  for (std::size_t i = 0; i < level.size(); ++i) {
    const NodePath path = level.path_of(i);
    const double lhs = bernoulli_mass(gibbs, path);
    const double rhs = std::pow(bernoulli_mass(params, path), q) * scale;
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  const bool theta_ok = std::abs(theta - 0.15517) < 5e-6;
  return {worst <= 1e-12 && theta_ok,
          printf_string("theta = %.6f, max |m_theta - m^q 2^(-n tau)| = %.3e (tol 1e-12)", theta, worst)};
}

Outcome martingale_mean(const Context& ctx) {
  const WeightModel model = lognormal_sigma2(0.2 * std::log(2.0));
  const auto traces = replica_traces(model, 12, ctx.replicas(10000), 3001, ctx.workers);
  const MassStatistics s = mass_statistics(traces, 1.0, 0.0);
  const double dev = std::abs(s.mean - 1.0);
  return {dev <= 3.0 * s.standard_error,
          printf_string("mean Y = %.6f, SE = %.6f, |mean - 1| = %.2f SE (tol 3)", s.mean, s.standard_error,
                        dev / s.standard_error)};
}

Outcome second_moment(const Context& ctx) {
  const WeightModel model = lognormal_sigma2(0.2 * std::log(2.0));
  const auto traces = replica_traces(model, 14, ctx.replicas(100000), 4001, ctx.workers);
  const MassStatistics s = mass_statistics(traces, 2.0, 0.0);
  const double target = 1.0 / (2.0 - std::exp2(0.2));
  const double dev = std::abs(s.mean - target);
  return {dev <= 5.0 * s.standard_error,
          printf_string("mean Y^2 = %.6f, target = %.7f, SE = %.6f, deviation = %.2f SE (tol 5)", s.mean, target,
                        s.standard_error, dev / s.standard_error)};
}

Outcome extinction(const Context& ctx) {
  const WeightModel model = validate(BirthDeath{0.8});
  const std::size_t replicas = ctx.replicas(10000);
  const auto traces = replica_traces(model, 20, replicas, 5001, ctx.workers);
  const MassStatistics s = mass_statistics(traces, 1.0, 0.0);
  const double fraction = static_cast<double>(s.exact_zero_count) / static_cast<double>(replicas);
  const double tol = 0.01 * ctx.widen();
  const double fixed_point = extinction_probability(model, kBinary);
  return {std::abs(fraction - 0.0625) <= tol && std::abs(fixed_point - 0.0625) <= 1e-12,
          printf_string("zero fraction = %.4f, fixed point = %.6f, target 0.0625 +- %.4f", fraction, fixed_point,
                        tol)};
}

Outcome degeneracy(const Context& ctx) {
  const double ln2 = std::log(2.0);
  const std::size_t replicas = std::max<std::size_t>(ctx.replicas(1000), 100);
  const DegeneracyVerdict strong =
      degeneracy_probe(replica_traces(lognormal_sigma2(3.0 * ln2), 18, replicas, 6001, ctx.workers), kBinary);
  const DegeneracyVerdict weak =
      degeneracy_probe(replica_traces(lognormal_sigma2(0.5 * ln2), 18, replicas, 6002, ctx.workers), kBinary);
  const bool ok = strong.verdict == Verdict::Degenerate && weak.verdict == Verdict::Nondegenerate;
  return {ok, printf_string("sigma^2 = 3 ln2: %s (slope %.4f +- %.4f); sigma^2 = 0.5 ln2: %s (slope %.4f +- %.4f)",
                            std::string(to_string(strong.verdict)).c_str(), strong.slope, strong.slope_standard_error,
                            std::string(to_string(weak.verdict)).c_str(), weak.slope, weak.slope_standard_error)};
}

Outcome dimension(const Context& ctx) {
  const WeightModel model = lognormal_sigma2(0.5 * std::log(2.0));
  constexpr std::size_t replicas = 50;
  std::vector<ExponentEstimate> per_replica(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    const LevelMassArray level = generate(CascadeConfig{kBinary, 18, 7001, r}, model, ctx.workers);
    per_replica[r] = dimension_estimate(level, 200, derive_seed(7002, r, 0));
  }
  const ExponentEstimate pooled = pool_replicas(per_replica);
  constexpr double half = 0.05;
  const double target = -tau_prime(model, kBinary, 1.0);
  return {std::abs(pooled.mean - 0.75) <= half,
          printf_string("pooled dimension = %.4f (SE %.4f, equal-weight %.4f), -tau'(1) = %.6f, accepted [%.3f, %.3f]",
                        pooled.mean, pooled.standard_error, equal_weight_mean(per_replica), target, 0.75 - half,
                        0.75 + half)};
}

Outcome simultaneous(const Context& ctx) {
  const WeightModel model = lognormal_sigma2(0.5 * std::log(2.0));
  constexpr double q = 1.5;
  constexpr std::size_t replicas = 50;
  std::vector<ExponentEstimate> per_replica(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    const CoupledCascade coupled = coupled_generate(CascadeConfig{kBinary, 18, 8001, r}, model, q, ctx.workers);
    per_replica[r] = simultaneous_exponent(coupled, 200, derive_seed(8002, r, 0));
  }
  const ExponentEstimate pooled = pool_replicas(per_replica);
  const double beta = -tau_prime(model, kBinary, q);
  const double spectrum = legendre(model, kBinary, beta);
  constexpr double half = 0.05;
  const bool ok = std::abs(pooled.mean - 0.5) <= half && std::abs(beta - 0.5) <= 1e-12 &&
                  std::abs(spectrum - 0.4375) <= 1e-3;
  return {ok, printf_string("pooled exponent = %.4f (SE %.4f, equal-weight %.4f), accepted [%.3f, %.3f]; "
                            "beta = %.6f, tau*(beta) = %.8f",
                            pooled.mean, pooled.standard_error, equal_weight_mean(per_replica), 0.5 - half, 0.5 + half,
                            beta, spectrum)};
}

Outcome q_range_closed_form(const Context&) {
  const WeightModel model = lognormal_sigma2(0.5 * std::log(2.0));
  const QRange range = q_range(model, kBinary);
  const double worst = std::max(std::abs(range.q_min + 2.0), std::abs(range.q_max - 2.0));
  return {worst <= 1e-8, printf_string("q_range = (%.12f, %.12f), max error %.3e (tol 1e-8)", range.q_min,
                                       range.q_max, worst)};
}

Outcome tilt_algebra(const Context&) {
  const std::vector<WeightModel> models{validate(BirthDeath{0.6}), lognormal_sigma2(0.5 * std::log(2.0)),
                                        validate(DiscreteAtoms{{{0.5, 0.5}, {1.5, 0.5}}})};
  double worst = 0.0;
  for (const WeightModel& model : models) {
    for (double q : {-1.0, 0.5, 2.0}) {
      const WeightModel tilted = tilt(model, q);
      const double tq = tau(model, kBinary, q);
      for (int k = -12; k <= 12; ++k) {
        const double t = 0.25 * k;
        const double lhs = tau(tilted, kBinary, t);
        const double rhs = tau(model, kBinary, t * q) - t * tq;
        worst = std::max(worst, std::abs(lhs - rhs));
      }
    }
  }
  return {worst <= 1e-10, printf_string("max |tau_tilt(t) - (tau(tq) - t tau(q))| = %.3e over 3 families "
                                        "(tol 1e-10)", worst)};
}

Outcome structure_bound(const Context& ctx) {
  const WeightModel model = lognormal_sigma2(0.5 * std::log(2.0));
  std::vector<double> qs;
  for (int k = -7; k <= 7; ++k) qs.push_back(0.25 * k);
  constexpr std::size_t replicas = 50;
  constexpr int depth = 16;
  std::vector<std::vector<double>> rows(replicas);
  parallel_for(replicas, ctx.workers, [&](std::size_t r) {
    const PartitionSums sums = stream_partition_sums(CascadeConfig{kBinary, depth, 11001, r}, model, qs, depth);
    rows[r] = empirical_tau(sums, depth).values;
  });
  double worst = -INFINITY;
  double worst_q = 0.0;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    double mean = 0.0;
    for (const auto& row : rows) mean += row[i];
    mean /= static_cast<double>(replicas);
    double var = 0.0;
    for (const auto& row : rows) var += (row[i] - mean) * (row[i] - mean);
    var /= static_cast<double>(replicas > 1 ? replicas - 1 : 1);
    const double se = std::sqrt(var / static_cast<double>(replicas));
    const double excess = (mean - tau(model, kBinary, qs[i])) / (se > 0.0 ? se : 1e-300);
    if (excess > worst) {
      worst = excess;
      worst_q = qs[i];
    }
  }
  return {worst <= 3.0, printf_string("max (mean tau~ - tau)/SE = %.2f at q = %.2f over %zu grid points (tol 3)",
                                      worst, worst_q, qs.size())};
}

Outcome determinism(const Context& ctx) {
  const std::vector<WeightModel> models{lognormal_sigma2(0.5 * std::log(2.0)), validate(BirthDeath{0.7})};
  int mismatches = 0;
  for (int k = 0; k < 10; ++k) {
    const WeightModel& model = models[static_cast<std::size_t>(k) % models.size()];
    const CascadeConfig config{kBinary, 14, 12001 + static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(3 * k)};
    const std::string serial = payload_digest(generate(config, model, 1));
    const std::string parallel = payload_digest(generate(config, model, 8));
    if (serial != parallel) ++mismatches;
  }
  (void)ctx;
  return {mismatches == 0, printf_string("%d of 10 (seed, replica) pairs differ between 1 and 8 workers", mismatches)};
}

Outcome inequality_kernels(const Context&) {
  std::mt19937_64 rng(13001);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> log_magnitude(-6.0, 6.0);
  constexpr int kSamples = 10000;
  constexpr double kRounding = 1e-12;

  int first_violations = 0;
  for (int i = 0; i < kSamples; ++i) {
    double x = std::pow(10.0, log_magnitude(rng));
    double y = std::pow(10.0, log_magnitude(rng));
    if (y > x) std::swap(x, y);
    const double q = unit(rng);
    if (q <= 0.0) continue;
    if (two_term_power_gap(x, y, q) < -kRounding * two_term_power_scale(x, y, q)) ++first_violations;
  }

  int second_violations = 0;
  std::uniform_int_distribution<int> width(2, 6);
  for (int i = 0; i < kSamples; ++i) {
    std::vector<double> xs(static_cast<std::size_t>(width(rng)));
    for (double& v : xs) v = unit(rng) < 0.1 ? 0.0 : std::pow(10.0, log_magnitude(rng));
    const double q = 1.0 - unit(rng);  // (0, 1]
    if (pairwise_power_gap(xs, q) < -kRounding * pairwise_power_scale(xs, q)) ++second_violations;
  }
  return {first_violations == 0 && second_violations == 0,
          printf_string("two-term bound: %d violations, pairwise bound: %d violations (%d samples each)",
                        first_violations, second_violations, kSamples)};
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)(const Context&);
};

constexpr Criterion kCriteria[] = {
    {1, "binomial-oracle", binomial_exactness},
    {2, "gibbs-identity", gibbs_identity},
    {3, "martingale-mean", martingale_mean},
    {4, "second-moment", second_moment},
    {5, "extinction-fixed-point", extinction},
    {6, "degeneracy-detection", degeneracy},
    {7, "information-dimension", dimension},
    {8, "simultaneous-exponent", simultaneous},
    {9, "q-range-closed-form", q_range_closed_form},
    {10, "tilt-algebra", tilt_algebra},
    {11, "structure-function-bound", structure_bound},
    {12, "parallel-determinism", determinism},
    {13, "inequality-kernels", inequality_kernels},
};

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options) {
  const Context ctx{options.quick, std::max(1u, options.workers)};
  std::vector<CriterionResult> results;
  for (const Criterion& c : kCriteria) {
    if (!options.only.empty() && std::find(options.only.begin(), options.only.end(), c.id) == options.only.end()) {
      continue;
    }
    CriterionResult result{c.id, c.name, false, {}, 0.0};
    const auto start = std::chrono::steady_clock::now();
    try {
      Outcome outcome = c.run(ctx);
      result.passed = outcome.passed;
      result.detail = std::move(outcome.detail);
    } catch (const CascadeError& e) {
      result.detail = std::string("error: ") + e.what();
    }
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (options.on_result) options.on_result(result);
    results.push_back(std::move(result));
  }
  return results;
}

std::string format_result(const CriterionResult& result) {
  return printf_string("%s %02d %-26s %s (%.1f s)", result.passed ? "PASS" : "FAIL", result.id, result.name.c_str(),
                       result.detail.c_str(), result.seconds);
}

}  // namespace cascadelab
