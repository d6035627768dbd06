#pragma once

#include <optional>
#include <span>

#include "cascadelab/records.hpp"
#include "cascadelab/weight_model.hpp"

namespace cascadelab {

/// Root searches never look beyond |q| <= kQCap; exponentials overflow past it.
inline constexpr double kQCap = 64.0;
inline constexpr double kRootTolerance = 1e-10;

/// tau(q) = log_ell E[W^q] - (q - 1), with E[W^0] read as P[W != 0].
/// Throws MomentInfinite where E[W^q] = +inf.
double tau(const WeightModel& model, const BranchingBase& base, double q);

/// tau'(q) = E[W^q ln W] / (E[W^q] ln ell) - 1.
double tau_prime(const WeightModel& model, const BranchingBase& base, double q);

double tau_second(const WeightModel& model, const BranchingBase& base, double q);

/// Smallest q at which tau is finite: 0 for laws with a zero atom whose
/// negative moments are infinite, -kQCap otherwise.
double tau_domain_min(const WeightModel& model);

/// Legendre transform tau*(beta) = inf_q (q beta + tau(q)).
///
/// Solves tau'(q) = -beta by safeguarded Newton/bisection on the
/// (monotone) derivative. Returns -infinity when beta lies outside the
/// slopes attained on the searchable q interval.
double legendre(const WeightModel& model, const BranchingBase& base, double beta);

struct QRange {
  double q_min = 0.0;
  double q_max = 0.0;
};

/// Interval of q around 1 where tau*(-tau'(q)) = tau(q) - q tau'(q) > 0.
/// Endpoints are +-infinity when the sign does not change within kQCap.
/// Throws DegenerateModel when tau'(1) >= 0.
QRange q_range(const WeightModel& model, const BranchingBase& base);

/// P[Y_inf = 0]: 1 for degenerate cascades, else the smallest fixed point of
/// f(x) = (r + (1 - r) x)^ell with r = P[W = 0].
double extinction_probability(const WeightModel& model, const BranchingBase& base);

/// n-fold iterate f^n(0) = P[Y_n = 0].
double extinction_iterate(const WeightModel& model, const BranchingBase& base, int n);

struct TheoryReport {
  bool nondegenerate = false;
  double mean_w_log_w = 0.0;  // E[W ln W]
  std::optional<double> information_dimension;
  double support_dimension = 0.0;
  double lq_bound_sup = 1.0;
  double extinction_probability = 1.0;
  std::optional<QRange> q_range;
};

TheoryReport diagnostics(const WeightModel& model, const BranchingBase& base);

StructureFunctionTable analytic_tau_table(const WeightModel& model, const BranchingBase& base,
                                          std::span<const double> q_grid);

}  // namespace cascadelab
