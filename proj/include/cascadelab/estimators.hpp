#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cascadelab/engine.hpp"
#include "cascadelab/records.hpp"
#include "cascadelab/weight_model.hpp"

namespace cascadelab {

/// tau~_n(q) = (1/n) log_ell sum_{I : m(I) > 0} m(I)^q. Throws AllMassZero.
StructureFunctionTable empirical_tau(const LevelMassArray& level, std::span<const double> q_grid);
StructureFunctionTable empirical_tau(const PartitionSums& sums, int depth);

/// -(1/n) log_ell m_n(I_path). Throws ZeroMassPath.
double local_exponent(const LevelMassArray& level, const NodePath& path);
double local_exponent_at(const LevelMassArray& level, std::size_t index);

struct ExponentEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t sample_count = 0;
  // Total mass of the level the cells were drawn from.
  double total_mass = 1.0;
};

/// Mean local exponent over m-distributed cells; estimates dim(m) = -tau'(1).
/// Draw i uses sub-seed derive_seed(sample_seed, 0, i).
ExponentEstimate dimension_estimate(const LevelMassArray& level, std::size_t sample_count,
                                    std::uint64_t sample_seed);

/// Cells drawn from the tilted cascade, exponents read off the base one;
/// estimates beta = -tau'(q).
ExponentEstimate simultaneous_exponent(const CoupledCascade& coupled, std::size_t sample_count,
                                       std::uint64_t sample_seed);

/// Pools per-replica estimates with weights total_mass * sample_count.
///
/// Drawing cells from m/Y inside each replica and averaging replicas
/// equally has an O(1/n) bias; weighting replica r by Y_r turns the pool
/// into a ratio estimate of E[sum_I m(I) e(I)] / E[Y], which is unbiased
/// in the numerator at every depth. The standard error is the delta-method
/// one for that ratio. Throws ZeroTotalMass if every weight is zero.
ExponentEstimate pool_replicas(std::span<const ExponentEstimate> replicas);

/// value(beta) = log_ell(#{I : |exponent(I) - beta| <= epsilon}) / n, -inf when empty.
SpectrumEstimate coarse_spectrum(const LevelMassArray& level, std::span<const double> beta_grid, double epsilon);

/// Discrete Legendre transform of a tabulated structure function. Chord
/// slopes are projected onto nondecreasing sequences first when noise has
/// broken convexity. Throws DegenerateGrid for fewer than 3 points.
SpectrumEstimate legendre_spectrum(const StructureFunctionTable& table);

/// Linear interpolation of the spectrum at beta; -inf outside its grid.
double interpolate_spectrum(const SpectrumEstimate& spectrum, double beta);

/// Statistics of Y_n^q across replicas. Extinct replicas count as 0 for
/// q > 0 and are excluded for q <= 0. Throws InsufficientReplicas.
MassStatistics mass_statistics(std::span<const MartingaleTrace> traces, double q, double zero_threshold);

enum class Verdict { Nondegenerate, Degenerate, Inconclusive };

struct DegeneracyVerdict {
  Verdict verdict = Verdict::Inconclusive;
  double slope = 0.0;
  double slope_standard_error = 0.0;
};

std::string_view to_string(Verdict verdict) noexcept;

/// Heuristic: least-squares slope of ln(median Y_k) over the deeper half of
/// the trace. Degenerate when slope < -0.02 ln ell and |slope| > 3 SE;
/// nondegenerate when |slope| <= 3 SE. Needs depth >= 8 and >= 100 replicas.
DegeneracyVerdict degeneracy_probe(std::span<const MartingaleTrace> traces, const BranchingBase& base);

struct NegativeMomentRow {
  double alpha = 0.0;
  double mean = 0.0;
  bool finite = false;
};

/// Empirical E[Y_n^{-alpha}] with a tail-stability flag (top 1% of replicas
/// contribute less than half of the mean). Throws ZeroMassEncountered for
/// laws with a zero atom or any extinct replica.
std::vector<NegativeMomentRow> negative_moment_probe(std::span<const MartingaleTrace> traces,
                                                     std::span<const double> alpha_grid, const WeightModel& model);

}  // namespace cascadelab
