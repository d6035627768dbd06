#include "cascadelab/theory.hpp"

#include <cmath>
#include <limits>

#include "cascadelab/error.hpp"

namespace cascadelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class F>
auto rethrow_infinite(F&& f) {
  try {
    return f();
  } catch (const CascadeError& e) {
    if (e.code() == ErrorCode::NegativeMomentOfZeroAtom) {
      throw CascadeError(ErrorCode::MomentInfinite, e.what());
    }
    throw;
  }
}

// Bisection on a sign change: pred(a) is true, pred(b) false. Returns the
// boundary to double precision.
template <class Pred>
double bisect_boundary(double a, double b, Pred&& pred) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (a + b);
    if (mid == a || mid == b) break;
    if (pred(mid)) {
      a = mid;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

double tau(const WeightModel& model, const BranchingBase& base, double q) {
  return rethrow_infinite([&] { return ln_moment(model, q) / base.log_ell() - (q - 1.0); });
}

double tau_prime(const WeightModel& model, const BranchingBase& base, double q) {
  return rethrow_infinite([&] { return tilted_log_mean(model, q) / base.log_ell() - 1.0; });
}

double tau_second(const WeightModel& model, const BranchingBase& base, double q) {
  return rethrow_infinite([&] { return tilted_log_variance(model, q) / base.log_ell(); });
}

double tau_domain_min(const WeightModel& model) {
  if (const auto* d = std::get_if<DiscreteAtoms>(&model); d && has_zero_atom(model)) return 0.0;
  return -kQCap;
}

double legendre(const WeightModel& model, const BranchingBase& base, double beta) {
  const double lo = tau_domain_min(model);
  const double hi = kQCap;
  // -tau' is nonincreasing in q.
  const double slope_lo = -tau_prime(model, base, lo);
  const double slope_hi = -tau_prime(model, base, hi);
  if (beta > slope_lo + kRootTolerance || beta < slope_hi - kRootTolerance) return -kInf;

  if (slope_lo - slope_hi <= kRootTolerance) {
    // Affine tau: the conjugate is finite only at its single slope.
    return beta + tau(model, base, 1.0);
  }

  auto residual = [&](double q) { return tau_prime(model, base, q) + beta; };
  double a = lo;
  double b = hi;
  double q = 1.0;
  for (int iter = 0; iter < 200 && b - a > kRootTolerance; ++iter) {
    const double r = residual(q);
    if (r == 0.0) break;
    if (r < 0.0) {
      a = q;
    } else {
      b = q;
    }
    const double curvature = tau_second(model, base, q);
    double next = curvature > 0.0 ? q - r / curvature : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (std::abs(next - q) < 1e-3 * kRootTolerance) {
      q = next;
      break;
    }
    q = next;
  }
  return q * beta + tau(model, base, q);
}

QRange q_range(const WeightModel& model, const BranchingBase& base) {
  auto g = [&](double q) { return tau(model, base, q) - q * tau_prime(model, base, q); };
  if (g(1.0) <= 0.0) {
    throw CascadeError(ErrorCode::DegenerateModel, "tau'(1) >= 0, the cascade is degenerate");
  }
  auto positive = [&](double q) { return g(q) > 0.0; };

  QRange range{-kInf, kInf};
  // g decreases on q > 0, so the upper root is found by doubling out from 1.
  for (double b = 2.0; b <= kQCap; b *= 2.0) {
    if (!positive(b)) {
      range.q_max = bisect_boundary(b / 2.0, b, positive);
      break;
    }
  }
  const double lo = tau_domain_min(model);
  if (lo >= 0.0) {
    range.q_min = lo;
    return range;
  }
  // g increases on q < 0 and g(0) = tau(0) > 0.
  for (double a = -1.0; a >= lo; a *= 2.0) {
    if (!positive(a)) {
      range.q_min = bisect_boundary(a / 2.0, a, positive);
      break;
    }
  }
  return range;
}

double extinction_probability(const WeightModel& model, const BranchingBase& base) {
  if (!(tilted_log_mean(model, 1.0) < base.log_ell())) return 1.0;
  const double r = zero_probability(model);
  if (r == 0.0) return 0.0;
  double x = 0.0;
  for (int i = 0; i < 10'000'000; ++i) {
    const double next = std::pow(r + (1.0 - r) * x, base.ell());
    if (std::abs(next - x) < 1e-12) return next;
    x = next;
  }
  return x;
}

double extinction_iterate(const WeightModel& model, const BranchingBase& base, int n) {
  const double r = zero_probability(model);
  double x = 0.0;
  for (int i = 0; i < n; ++i) x = std::pow(r + (1.0 - r) * x, base.ell());
  return x;
}

TheoryReport diagnostics(const WeightModel& model, const BranchingBase& base) {
  TheoryReport report;
  report.mean_w_log_w = tilted_log_mean(model, 1.0);
  report.nondegenerate = report.mean_w_log_w < base.log_ell();
  if (report.nondegenerate) {
    report.information_dimension = 1.0 - report.mean_w_log_w / base.log_ell();
    report.q_range = q_range(model, base);
  }
  report.support_dimension = tau(model, base, 0.0);

  // tau is convex with tau(1) = 0, so {q > 1 : tau(q) < 0} is an interval (1, q*).
  auto negative = [&](double q) { return tau(model, base, q) < 0.0; };
  if (tau_prime(model, base, 1.0) >= 0.0) {
    report.lq_bound_sup = 1.0;
  } else if (negative(kQCap)) {
    report.lq_bound_sup = kInf;
  } else {
    report.lq_bound_sup = bisect_boundary(1.0, kQCap, [&](double q) { return q == 1.0 || negative(q); });
  }
  report.extinction_probability = extinction_probability(model, base);
  return report;
}

StructureFunctionTable analytic_tau_table(const WeightModel& model, const BranchingBase& base,
                                          std::span<const double> q_grid) {
  StructureFunctionTable table;
  table.kind = TableKind::Analytic;
  table.q_grid.assign(q_grid.begin(), q_grid.end());
  table.values.reserve(q_grid.size());
  for (double q : q_grid) table.values.push_back(tau(model, base, q));
  return table;
}

}  // namespace cascadelab
