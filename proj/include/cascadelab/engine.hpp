#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cascadelab/records.hpp"
#include "cascadelab/weight_model.hpp"

namespace cascadelab {

struct CascadeConfig {
  BranchingBase base{2};
  int depth = 1;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
};

/// Word eps_1 ... eps_k addressing an ell-adic interval; the empty word is [0,1).
struct NodePath {
  std::vector<int> digits;

  std::size_t length() const noexcept { return digits.size(); }
  friend bool operator==(const NodePath&, const NodePath&) = default;
};

/// Largest level (ell^depth cells) that generate() will materialize.
inline constexpr std::uint64_t kMaxMaterializedCells = std::uint64_t{1} << 27;

/// ell^depth; throws DepthTooLarge above kMaxMaterializedCells.
std::size_t materialized_cells(const BranchingBase& base, int depth);

/// Turns one uniform variate into ln W for a fixed weight law.
///
/// BirthDeath: W = 1/p when u < p, else 0. LogNormal: one uniform through
/// the inverse normal CDF. DiscreteAtoms: inverse CDF over sorted atoms.
/// A zero weight is returned as -infinity.
class WeightSampler {
 public:
  explicit WeightSampler(const WeightModel& model);

  double log_weight(double u) const noexcept;

 private:
  enum class Kind { BirthDeath, LogNormal, Discrete };
  Kind kind_;
  double p_ = 0.0;
  double log_inv_p_ = 0.0;
  double sigma_ = 0.0;
  double half_variance_ = 0.0;
  std::vector<double> cdf_;
  std::vector<double> log_values_;
};

/// All ell^n cells of one depth-n cascade level.
///
/// Values are stored as log-densities ln f_n(I) = sum_k ln W_{eps_1..eps_k},
/// so m_n(I) = exp(log_density) / ell^n. Exactly-zero cells are flagged in
/// a separate zero mask (their stored value is -infinity). Cells are in
/// lexicographic path order: index = sum_k eps_k ell^{n-k}.
class LevelMassArray {
 public:
  LevelMassArray(CascadeConfig config, std::string model_descriptor, std::vector<double> log_density);
  /// Throws InvalidParameter if mask and values disagree on which cells are zero.
  LevelMassArray(CascadeConfig config, std::string model_descriptor, std::vector<double> log_density,
                 std::vector<std::uint8_t> zero_mask);

  const CascadeConfig& config() const noexcept { return config_; }
  const std::string& model_descriptor() const noexcept { return model_descriptor_; }
  int depth() const noexcept { return config_.depth; }
  int ell() const noexcept { return config_.base.ell(); }
  std::size_t size() const noexcept { return log_density_.size(); }

  double log_density(std::size_t i) const { return log_density_[i]; }
  double log_mass(std::size_t i) const { return log_density_[i] - depth() * config_.base.log_ell(); }
  bool is_zero(std::size_t i) const { return zero_mask_[i] != 0; }

  std::span<const double> log_densities() const noexcept { return log_density_; }
  std::span<const std::uint8_t> zero_mask() const noexcept { return zero_mask_; }

  std::size_t index_of(const NodePath& path) const;
  NodePath path_of(std::size_t index) const;

  friend bool operator==(const LevelMassArray& a, const LevelMassArray& b);

 private:
  CascadeConfig config_;
  std::string model_descriptor_;
  std::vector<double> log_density_;
  std::vector<std::uint8_t> zero_mask_;
};

/// Key of the node at `path` for (seed, replica).
std::uint64_t node_key(std::uint64_t seed, std::uint64_t replica, const NodePath& path);

/// ln W at a node (-infinity for a zero weight). Pure in (seed, replica, path).
double node_log_weight(std::uint64_t seed, std::uint64_t replica, const NodePath& path, const WeightModel& model);
double node_weight(std::uint64_t seed, std::uint64_t replica, const NodePath& path, const WeightModel& model);

/// Materializes m_n. Bit-identical for any worker count.
LevelMassArray generate(const CascadeConfig& config, const WeightModel& model, unsigned workers = 1);

/// One level deeper: child density = parent density * W_child.
LevelMassArray refine(const LevelMassArray& level, const WeightModel& model, unsigned workers = 1);

/// Y_n = m_n([0,1]) by a max-shifted compensated sum.
double total_mass(const LevelMassArray& level);

/// ln sum_{I : m(I) > 0} m(I)^q, or -infinity when every cell is zero.
double partition_log_sum(const LevelMassArray& level, double q);

/// Y_1..Y_n for one replica, computed depth-first without materializing
/// any level. Subtrees below a zero weight are skipped.
MartingaleTrace martingale_trace(const CascadeConfig& config, const WeightModel& model);

/// Draws cells with probability m_n(I) / Y_n by descending the tree.
///
/// Built once per level from a bottom-up pass of subtree log-sums; each
/// draw renormalizes the child masses at every node. Ties go to the lower
/// digit. Throws ZeroTotalMass for an all-zero level.
class PathSampler {
 public:
  explicit PathSampler(const LevelMassArray& level);

  std::size_t sample_index(std::uint64_t sample_seed) const;
  NodePath sample(std::uint64_t sample_seed) const;

 private:
  int ell_;
  int depth_;
  // pyramid_[k] holds the log-sum of each depth-k subtree.
  std::vector<std::vector<double>> pyramid_;
};

NodePath sample_point(const LevelMassArray& level, std::uint64_t sample_seed);

/// Base cascade with weights W and tilted cascade with W' = W^q / E[W^q]
/// built from the same node draws.
struct CoupledCascade {
  LevelMassArray base_level;
  LevelMassArray tilted_level;
  double tilt_q = 1.0;
};

/// Throws MomentInfinite when E[W^q] is infinite, DepthTooLarge past the cap.
CoupledCascade coupled_generate(const CascadeConfig& config, const WeightModel& model, double q,
                                unsigned workers = 1);

/// ln sum_I m(I)^q over every depth up to max_depth, computed depth-first.
struct PartitionSums {
  std::vector<double> q_grid;
  // log_sums[k - 1][i]: depth k, q_grid[i]; -infinity when the level is extinct.
  std::vector<std::vector<double>> log_sums;
  BranchingBase base{2};

  int max_depth() const noexcept { return static_cast<int>(log_sums.size()); }
};

PartitionSums stream_partition_sums(const CascadeConfig& config, const WeightModel& model,
                                    std::span<const double> q_grid, int max_depth);

}  // namespace cascadelab
