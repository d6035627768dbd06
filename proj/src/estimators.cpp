#include "cascadelab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cascadelab/error.hpp"
#include "cascadelab/rng.hpp"

namespace cascadelab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

ExponentEstimate summarize(const std::vector<double>& samples) {
  ExponentEstimate e;
  e.sample_count = samples.size();
  if (samples.empty()) return e;
  const double n = static_cast<double>(samples.size());
  e.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  if (samples.size() >= 2) {
    double ss = 0.0;
    for (double x : samples) ss += (x - e.mean) * (x - e.mean);
    e.standard_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return e;
}

double median(std::vector<double> values) {
  const std::size_t n = values.size();
  std::sort(values.begin(), values.end());
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

void check_sample_count(std::size_t sample_count) {
  if (sample_count < 2) throw CascadeError(ErrorCode::InvalidParameter, "sample_count must be >= 2");
}

}  // namespace

std::string_view to_string(Verdict verdict) noexcept {
  switch (verdict) {
    case Verdict::Nondegenerate: return "nondegenerate";
    case Verdict::Degenerate: return "degenerate";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

StructureFunctionTable empirical_tau(const LevelMassArray& level, std::span<const double> q_grid) {
  StructureFunctionTable table;
  table.kind = TableKind::Empirical;
  table.depth = level.depth();
  table.q_grid.assign(q_grid.begin(), q_grid.end());
  const double scale = level.depth() * level.config().base.log_ell();
  for (double q : q_grid) {
    const double lse = partition_log_sum(level, q);
    if (lse == kNegInf) throw CascadeError(ErrorCode::AllMassZero, "every interval is extinct");
    table.values.push_back(lse / scale);
  }
  return table;
}

StructureFunctionTable empirical_tau(const PartitionSums& sums, int depth) {
  if (depth < 1 || depth > sums.max_depth()) throw CascadeError(ErrorCode::InvalidParameter, "depth not in table");
  StructureFunctionTable table;
  table.kind = TableKind::Empirical;
  table.depth = depth;
  table.q_grid = sums.q_grid;
  const double scale = depth * sums.base.log_ell();
  for (double lse : sums.log_sums[static_cast<std::size_t>(depth - 1)]) {
    if (lse == kNegInf) throw CascadeError(ErrorCode::AllMassZero, "every interval is extinct");
    table.values.push_back(lse / scale);
  }
  return table;
}

double local_exponent_at(const LevelMassArray& level, std::size_t index) {
  if (level.is_zero(index)) throw CascadeError(ErrorCode::ZeroMassPath, "local exponent of a zero-mass interval");
  return 1.0 - level.log_density(index) / (level.depth() * level.config().base.log_ell());
}

double local_exponent(const LevelMassArray& level, const NodePath& path) {
  return local_exponent_at(level, level.index_of(path));
}

ExponentEstimate dimension_estimate(const LevelMassArray& level, std::size_t sample_count, std::uint64_t sample_seed) {
  check_sample_count(sample_count);
  const PathSampler sampler(level);
  std::vector<double> exponents(sample_count);
  for (std::size_t i = 0; i < sample_count; ++i) {
    exponents[i] = local_exponent_at(level, sampler.sample_index(derive_seed(sample_seed, 0, i)));
  }
  ExponentEstimate e = summarize(exponents);
  e.total_mass = total_mass(level);
  return e;
}

ExponentEstimate simultaneous_exponent(const CoupledCascade& coupled, std::size_t sample_count,
                                       std::uint64_t sample_seed) {
  check_sample_count(sample_count);
  const PathSampler sampler(coupled.tilted_level);
  std::vector<double> exponents(sample_count);
  for (std::size_t i = 0; i < sample_count; ++i) {
    exponents[i] = local_exponent_at(coupled.base_level, sampler.sample_index(derive_seed(sample_seed, 0, i)));
  }
  ExponentEstimate e = summarize(exponents);
  e.total_mass = total_mass(coupled.tilted_level);
  return e;
}

ExponentEstimate pool_replicas(std::span<const ExponentEstimate> replicas) {
  ExponentEstimate pooled;
  if (replicas.empty()) return pooled;
  // Replica r carries weight Y_r * samples_r, so the pool targets E[Y * (mean over m/Y)] / E[Y].
  double weight_sum = 0.0;
  double weighted = 0.0;
  for (const auto& r : replicas) {
    const double w = r.total_mass * static_cast<double>(r.sample_count);
    weight_sum += w;
    weighted += w * r.mean;
    pooled.sample_count += r.sample_count;
  }
  pooled.total_mass = 0.0;
  for (const auto& r : replicas) pooled.total_mass += r.total_mass;
  if (!(weight_sum > 0.0)) throw CascadeError(ErrorCode::ZeroTotalMass, "every pooled replica has zero mass");
  pooled.mean = weighted / weight_sum;
  if (replicas.size() == 1) {
    pooled.standard_error = replicas.front().standard_error;
    return pooled;
  }
  // Delta-method standard error of the ratio estimator.
  double ss = 0.0;
  for (const auto& r : replicas) {
    const double w = r.total_mass * static_cast<double>(r.sample_count);
    ss += w * w * (r.mean - pooled.mean) * (r.mean - pooled.mean);
  }
  const double k = static_cast<double>(replicas.size());
  pooled.standard_error = std::sqrt(ss * k / (k - 1.0)) / weight_sum;
  return pooled;
}

SpectrumEstimate coarse_spectrum(const LevelMassArray& level, std::span<const double> beta_grid, double epsilon) {
  if (!(epsilon > 0.0)) throw CascadeError(ErrorCode::InvalidParameter, "epsilon must be > 0");
  std::vector<double> exponents;
  exponents.reserve(level.size());
  for (std::size_t i = 0; i < level.size(); ++i) {
    if (!level.is_zero(i)) exponents.push_back(local_exponent_at(level, i));
  }
  std::sort(exponents.begin(), exponents.end());
  const double scale = level.depth() * level.config().base.log_ell();

  SpectrumEstimate out;
  out.kind = SpectrumKind::Coarse;
  out.depth = level.depth();
  out.epsilon = epsilon;
  out.beta_grid.assign(beta_grid.begin(), beta_grid.end());
  for (double beta : beta_grid) {
    const auto lo = std::lower_bound(exponents.begin(), exponents.end(), beta - epsilon);
    const auto hi = std::upper_bound(exponents.begin(), exponents.end(), beta + epsilon);
    const auto count = hi - lo;
    out.values.push_back(count > 0 ? std::log(static_cast<double>(count)) / scale : kNegInf);
  }
  return out;
}

SpectrumEstimate legendre_spectrum(const StructureFunctionTable& table) {
  const std::size_t n = table.q_grid.size();
  if (n < 3 || table.values.size() != n) {
    throw CascadeError(ErrorCode::DegenerateGrid, "Legendre transform needs at least 3 grid points");
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (!(table.q_grid[i] > table.q_grid[i - 1])) {
      throw CascadeError(ErrorCode::InvalidParameter, "q grid must be strictly increasing");
    }
  }

  // Chord slopes, pooled (PAV, weighted by chord width) until nondecreasing.
  struct Block {
    double slope;
    double width;
    std::size_t count;
  };
  std::vector<Block> blocks;
  bool convexified = false;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double width = table.q_grid[i + 1] - table.q_grid[i];
    blocks.push_back({(table.values[i + 1] - table.values[i]) / width, width, 1});
    while (blocks.size() >= 2) {
      Block& prev = blocks[blocks.size() - 2];
      const Block& last = blocks.back();
      const double tol = 1e-9 * std::max(1.0, std::abs(prev.slope));
      if (last.slope >= prev.slope - tol) break;
      convexified = true;
      prev.slope = (prev.slope * prev.width + last.slope * last.width) / (prev.width + last.width);
      prev.width += last.width;
      prev.count += last.count;
      blocks.pop_back();
    }
  }

  // Each pooled block is one supporting line: beta = -slope, touching the
  // (projected) table at the block's left end.
  SpectrumEstimate out;
  out.kind = SpectrumKind::Legendre;
  out.depth = table.depth;
  out.convexified = convexified;
  std::size_t left = 0;
  double tau_left = table.values[0];
  for (const Block& b : blocks) {
    const double beta = -b.slope;
    const double tau_here = convexified ? tau_left : table.values[left];
    const double value = table.q_grid[left] * beta + tau_here;
    if (out.beta_grid.empty() || std::abs(out.beta_grid.back() - beta) > 1e-12 * std::max(1.0, std::abs(beta))) {
      out.beta_grid.push_back(beta);
      out.values.push_back(value);
    }
    tau_left += b.slope * b.width;
    left += b.count;
  }
  std::reverse(out.beta_grid.begin(), out.beta_grid.end());
  std::reverse(out.values.begin(), out.values.end());
  return out;
}

double interpolate_spectrum(const SpectrumEstimate& spectrum, double beta) {
  const auto& xs = spectrum.beta_grid;
  if (xs.empty() || beta < xs.front() || beta > xs.back()) return kNegInf;
  const auto it = std::lower_bound(xs.begin(), xs.end(), beta);
  const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
  if (xs[hi] == beta || hi == 0) return spectrum.values[hi];
  const std::size_t lo = hi - 1;
  const double t = (beta - xs[lo]) / (xs[hi] - xs[lo]);
  return spectrum.values[lo] + t * (spectrum.values[hi] - spectrum.values[lo]);
}

MassStatistics mass_statistics(std::span<const MartingaleTrace> traces, double q, double zero_threshold) {
  if (traces.size() < 2) throw CascadeError(ErrorCode::InsufficientReplicas, "need at least 2 replicas");
  const int depth = traces.front().depth();
  MassStatistics stats;
  stats.q = q;
  stats.depth = depth;
  std::vector<double> values;
  values.reserve(traces.size());
  for (const auto& t : traces) {
    if (t.depth() != depth) throw CascadeError(ErrorCode::InvalidParameter, "traces must share a depth");
    const double y = t.final_mass();
    if (y == 0.0) {
      ++stats.exact_zero_count;
      if (q > 0.0) {
        values.push_back(0.0);
      } else {
        ++stats.excluded_count;
      }
      continue;
    }
    if (y < zero_threshold) ++stats.below_threshold_count;
    values.push_back(std::pow(y, q));
  }
  if (values.size() < 2) throw CascadeError(ErrorCode::InsufficientReplicas, "fewer than 2 usable replicas");
  stats.replica_count = values.size();
  stats.extinct_fraction = static_cast<double>(stats.exact_zero_count + stats.below_threshold_count) /
                           static_cast<double>(traces.size());
  const double n = static_cast<double>(values.size());
  stats.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - stats.mean) * (v - stats.mean);
  stats.variance = ss / (n - 1.0);
  stats.standard_error = std::sqrt(stats.variance / n);
  return stats;
}

DegeneracyVerdict degeneracy_probe(std::span<const MartingaleTrace> traces, const BranchingBase& base) {
  if (traces.size() < 100) throw CascadeError(ErrorCode::InsufficientData, "need at least 100 replicas");
  const int depth = traces.front().depth();
  if (depth < 8) throw CascadeError(ErrorCode::InsufficientData, "need depth >= 8");
  for (const auto& t : traces) {
    if (t.depth() != depth) throw CascadeError(ErrorCode::InvalidParameter, "traces must share a depth");
  }

  std::vector<double> ks;
  std::vector<double> ys;
  for (int k = depth / 2 + 1; k <= depth; ++k) {
    std::vector<double> column;
    column.reserve(traces.size());
    for (const auto& t : traces) column.push_back(t.values[static_cast<std::size_t>(k - 1)]);
    const double med = median(std::move(column));
    if (!(med > 0.0)) {
      // More than half the replicas are extinct: the median carries no slope.
      return {Verdict::Inconclusive, kNegInf, std::numeric_limits<double>::quiet_NaN()};
    }
    ks.push_back(k);
    ys.push_back(std::log(med));
  }

  const double m = static_cast<double>(ks.size());
  const double kbar = std::accumulate(ks.begin(), ks.end(), 0.0) / m;
  const double ybar = std::accumulate(ys.begin(), ys.end(), 0.0) / m;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    sxx += (ks[i] - kbar) * (ks[i] - kbar);
    sxy += (ks[i] - kbar) * (ys[i] - ybar);
  }
  DegeneracyVerdict v;
  v.slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const double r = ys[i] - ybar - v.slope * (ks[i] - kbar);
    rss += r * r;
  }
  v.slope_standard_error = std::sqrt(rss / (m - 2.0) / sxx);

  const double bound = 3.0 * v.slope_standard_error;
  if (v.slope < -0.02 * base.log_ell() && std::abs(v.slope) > bound) {
    v.verdict = Verdict::Degenerate;
  } else if (std::abs(v.slope) <= bound) {
    v.verdict = Verdict::Nondegenerate;
  } else {
    v.verdict = Verdict::Inconclusive;
  }
  return v;
}

std::vector<NegativeMomentRow> negative_moment_probe(std::span<const MartingaleTrace> traces,
                                                     std::span<const double> alpha_grid, const WeightModel& model) {
  if (has_zero_atom(model)) {
    throw CascadeError(ErrorCode::ZeroMassEncountered, "negative moments need P[W=0] = 0");
  }
  if (traces.empty()) throw CascadeError(ErrorCode::InsufficientReplicas, "no traces");
  for (const auto& t : traces) {
    if (t.final_mass() == 0.0) throw CascadeError(ErrorCode::ZeroMassEncountered, "a replica is extinct");
  }
  const std::size_t top = std::max<std::size_t>(1, (traces.size() + 99) / 100);
  std::vector<NegativeMomentRow> rows;
  for (double alpha : alpha_grid) {
    std::vector<double> v;
    v.reserve(traces.size());
    for (const auto& t : traces) v.push_back(std::pow(t.final_mass(), -alpha));
    std::sort(v.begin(), v.end(), std::greater<>());
    const double total = std::accumulate(v.begin(), v.end(), 0.0);
    const double head = std::accumulate(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(top), 0.0);
    rows.push_back({alpha, total / static_cast<double>(v.size()), head < 0.5 * total});
  }
  return rows;
}

}  // namespace cascadelab
