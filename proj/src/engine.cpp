#include "cascadelab/engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <utility>

#include "cascadelab/error.hpp"
#include "cascadelab/parallel.hpp"
#include "cascadelab/rng.hpp"
#include "cascadelab/theory.hpp"
#include "summation.hpp"

namespace cascadelab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double integer_power(int ell, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= ell;
  return r;
}

std::vector<std::size_t> cells_below(int ell, int depth) {
  // cells_below[k] = ell^(depth - k): leaves under one depth-k node.
  std::vector<std::size_t> widths(static_cast<std::size_t>(depth) + 1);
  widths[static_cast<std::size_t>(depth)] = 1;
  for (int k = depth - 1; k >= 0; --k) widths[k] = widths[k + 1] * static_cast<std::size_t>(ell);
  return widths;
}

struct Node {
  std::uint64_t key;
  double log_density;
  double tilted_log_density;
  std::size_t index;
};

// Nodes of generation `split` in lexicographic order, computed breadth-first
// with exactly the arithmetic a depth-first descent would perform.
std::vector<Node> expand_prefixes(std::uint64_t root, int ell, int split, const WeightSampler& sampler,
                                  double tilt_q, double tilt_shift) {
  std::vector<Node> nodes{{root, 0.0, 0.0, 0}};
  for (int k = 0; k < split; ++k) {
    std::vector<Node> next;
    next.reserve(nodes.size() * static_cast<std::size_t>(ell));
    for (const Node& n : nodes) {
      for (int j = 0; j < ell; ++j) {
        const std::uint64_t key = child_key(n.key, static_cast<unsigned>(j));
        const double lw = sampler.log_weight(key_uniform(key));
        Node c{key, kNegInf, kNegInf, n.index * static_cast<std::size_t>(ell) + static_cast<std::size_t>(j)};
        if (n.log_density != kNegInf && lw != kNegInf) {
          c.log_density = n.log_density + lw;
          c.tilted_log_density = n.tilted_log_density + (tilt_q * lw - tilt_shift);
        }
        next.push_back(c);
      }
    }
    nodes = std::move(next);
  }
  return nodes;
}

int split_depth(int ell, int depth, unsigned workers) {
  if (workers <= 1) return 0;
  int s = 0;
  std::size_t count = 1;
  while (s < depth && count < 16 * static_cast<std::size_t>(workers)) {
    count *= static_cast<std::size_t>(ell);
    ++s;
  }
  return s;
}

// Writes the leaves below one node. When `tilted_out` is set the tilted
// densities q ln W - ln E[W^q] are accumulated from the same draws.
class LevelFiller {
 public:
  LevelFiller(const WeightSampler& sampler, int ell, int depth, double* out, std::uint8_t* mask,
              double* tilted_out, double tilt_q, double tilt_shift)
      : sampler_(sampler),
        ell_(ell),
        depth_(depth),
        widths_(cells_below(ell, depth)),
        out_(out),
        mask_(mask),
        tilted_out_(tilted_out),
        tilt_q_(tilt_q),
        tilt_shift_(tilt_shift) {}

  void fill(const Node& node, int node_depth) {
    if (node.log_density == kNegInf) {
      fill_zero(node.index, node_depth);
      return;
    }
    if (node_depth == depth_) {
      out_[node.index] = node.log_density;
      mask_[node.index] = 0;
      if (tilted_out_) tilted_out_[node.index] = node.tilted_log_density;
      return;
    }
    for (int j = 0; j < ell_; ++j) {
      const std::uint64_t key = child_key(node.key, static_cast<unsigned>(j));
      const double lw = sampler_.log_weight(key_uniform(key));
      Node c{key, kNegInf, kNegInf, node.index * static_cast<std::size_t>(ell_) + static_cast<std::size_t>(j)};
      if (lw != kNegInf) {
        c.log_density = node.log_density + lw;
        if (tilted_out_) c.tilted_log_density = node.tilted_log_density + (tilt_q_ * lw - tilt_shift_);
      }
      fill(c, node_depth + 1);
    }
  }

 private:
  void fill_zero(std::size_t index, int node_depth) {
    const std::size_t width = widths_[static_cast<std::size_t>(node_depth)];
    const std::size_t begin = index * width;
    std::fill(out_ + begin, out_ + begin + width, kNegInf);
    std::fill(mask_ + begin, mask_ + begin + width, std::uint8_t{1});
    if (tilted_out_) std::fill(tilted_out_ + begin, tilted_out_ + begin + width, kNegInf);
  }

  const WeightSampler& sampler_;
  int ell_;
  int depth_;
  std::vector<std::size_t> widths_;
  double* out_;
  std::uint8_t* mask_;
  double* tilted_out_;
  double tilt_q_;
  double tilt_shift_;
};

struct Generated {
  std::vector<double> base;
  std::vector<std::uint8_t> mask;
  std::vector<double> tilted;
};

Generated generate_impl(const CascadeConfig& config, const WeightModel& model, bool coupled, double tilt_q,
                        double tilt_shift, unsigned workers) {
  if (config.depth < 1) throw CascadeError(ErrorCode::InvalidParameter, "depth must be >= 1");
  const std::size_t cells = materialized_cells(config.base, config.depth);
  const int ell = config.base.ell();
  const WeightSampler sampler(model);

  Generated g;
  g.base.resize(cells);
  g.mask.resize(cells);
  if (coupled) g.tilted.resize(cells);

  const int split = split_depth(ell, config.depth, workers);
  const std::vector<Node> prefixes =
      expand_prefixes(root_key(config.seed, config.replica), ell, split, sampler, tilt_q, tilt_shift);
  parallel_for(prefixes.size(), workers, [&](std::size_t i) {
    LevelFiller filler(sampler, ell, config.depth, g.base.data(), g.mask.data(),
                       coupled ? g.tilted.data() : nullptr, tilt_q, tilt_shift);
    filler.fill(prefixes[i], split);
  });
  return g;
}

// Visits every nonzero node at depths 1..max_depth, pruning zero subtrees.
template <class Visit>
void walk_nonzero(const WeightSampler& sampler, int ell, int max_depth, std::uint64_t key, double log_density,
                  int node_depth, Visit& visit) {
  for (int j = 0; j < ell; ++j) {
    const std::uint64_t ck = child_key(key, static_cast<unsigned>(j));
    const double lw = sampler.log_weight(key_uniform(ck));
    if (lw == kNegInf) continue;
    const double child = log_density + lw;
    visit(node_depth + 1, child);
    if (node_depth + 1 < max_depth) walk_nonzero(sampler, ell, max_depth, ck, child, node_depth + 1, visit);
  }
}

}  // namespace

std::size_t materialized_cells(const BranchingBase& base, int depth) {
  std::uint64_t cells = 1;
  for (int k = 0; k < depth; ++k) {
    cells *= static_cast<std::uint64_t>(base.ell());
    if (cells > kMaxMaterializedCells) {
      throw CascadeError(ErrorCode::DepthTooLarge, "ell^depth exceeds 2^27 cells; use the streaming routines");
    }
  }
  return static_cast<std::size_t>(cells);
}

WeightSampler::WeightSampler(const WeightModel& model) {
  std::visit(Overloaded{
                 [this](const BirthDeath& m) {
                   kind_ = Kind::BirthDeath;
                   p_ = m.p;
                   log_inv_p_ = -std::log(m.p);
                 },
                 [this](const LogNormal& m) {
                   kind_ = Kind::LogNormal;
                   sigma_ = m.sigma;
                   half_variance_ = 0.5 * m.sigma * m.sigma;
                 },
                 [this](const DiscreteAtoms& m) {
                   kind_ = Kind::Discrete;
                   double cum = 0.0;
                   for (const Atom& a : m.atoms) {
                     cum += a.prob;
                     cdf_.push_back(cum);
                     log_values_.push_back(a.value > 0.0 ? std::log(a.value) : kNegInf);
                   }
                 },
             },
             model);
}

double WeightSampler::log_weight(double u) const noexcept {
  switch (kind_) {
    case Kind::BirthDeath:
      return u < p_ ? log_inv_p_ : kNegInf;
    case Kind::LogNormal:
      return sigma_ * normal_quantile(u) - half_variance_;
    case Kind::Discrete: {
      const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
      const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
      return log_values_[i];
    }
  }
  return kNegInf;
}

LevelMassArray::LevelMassArray(CascadeConfig config, std::string model_descriptor, std::vector<double> log_density)
    : config_(config), model_descriptor_(std::move(model_descriptor)), log_density_(std::move(log_density)) {
  zero_mask_.resize(log_density_.size());
  for (std::size_t i = 0; i < log_density_.size(); ++i) zero_mask_[i] = log_density_[i] == kNegInf ? 1 : 0;
  if (log_density_.size() != materialized_cells(config_.base, config_.depth)) {
    throw CascadeError(ErrorCode::InvalidParameter, "level size does not match ell^depth");
  }
}

LevelMassArray::LevelMassArray(CascadeConfig config, std::string model_descriptor, std::vector<double> log_density,
                               std::vector<std::uint8_t> zero_mask)
    : config_(config),
      model_descriptor_(std::move(model_descriptor)),
      log_density_(std::move(log_density)),
      zero_mask_(std::move(zero_mask)) {
  if (log_density_.size() != materialized_cells(config_.base, config_.depth) ||
      zero_mask_.size() != log_density_.size()) {
    throw CascadeError(ErrorCode::InvalidParameter, "level size does not match ell^depth");
  }
  for (std::size_t i = 0; i < log_density_.size(); ++i) {
    if ((zero_mask_[i] != 0) != (log_density_[i] == kNegInf) || std::isnan(log_density_[i])) {
      throw CascadeError(ErrorCode::InvalidParameter, "zero mask disagrees with stored values");
    }
  }
}

std::size_t LevelMassArray::index_of(const NodePath& path) const {
  if (path.length() != static_cast<std::size_t>(depth())) {
    throw CascadeError(ErrorCode::InvalidParameter, "path length differs from level depth");
  }
  std::size_t index = 0;
  for (int d : path.digits) {
    if (d < 0 || d >= ell()) throw CascadeError(ErrorCode::InvalidParameter, "path digit out of range");
    index = index * static_cast<std::size_t>(ell()) + static_cast<std::size_t>(d);
  }
  return index;
}

NodePath LevelMassArray::path_of(std::size_t index) const {
  NodePath path;
  path.digits.resize(static_cast<std::size_t>(depth()));
  for (int k = depth() - 1; k >= 0; --k) {
    path.digits[static_cast<std::size_t>(k)] = static_cast<int>(index % static_cast<std::size_t>(ell()));
    index /= static_cast<std::size_t>(ell());
  }
  return path;
}

bool operator==(const LevelMassArray& a, const LevelMassArray& b) {
  if (!(a.config_.base == b.config_.base) || a.config_.depth != b.config_.depth ||
      a.config_.seed != b.config_.seed || a.config_.replica != b.config_.replica ||
      a.model_descriptor_ != b.model_descriptor_ || a.zero_mask_ != b.zero_mask_) {
    return false;
  }
  // Bitwise comparison so that -inf == -inf and signed zeros are distinguished.
  return std::equal(a.log_density_.begin(), a.log_density_.end(), b.log_density_.begin(), b.log_density_.end(),
                    [](double x, double y) {
                      return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
                    });
}

std::uint64_t node_key(std::uint64_t seed, std::uint64_t replica, const NodePath& path) {
  std::uint64_t key = root_key(seed, replica);
  for (int d : path.digits) key = child_key(key, static_cast<unsigned>(d));
  return key;
}

double node_log_weight(std::uint64_t seed, std::uint64_t replica, const NodePath& path, const WeightModel& model) {
  if (path.digits.empty()) throw CascadeError(ErrorCode::InvalidParameter, "the root carries no weight");
  return WeightSampler(model).log_weight(key_uniform(node_key(seed, replica, path)));
}

double node_weight(std::uint64_t seed, std::uint64_t replica, const NodePath& path, const WeightModel& model) {
  return std::exp(node_log_weight(seed, replica, path, model));
}

LevelMassArray generate(const CascadeConfig& config, const WeightModel& model, unsigned workers) {
  Generated g = generate_impl(config, model, false, 1.0, 0.0, workers);
  return LevelMassArray(config, describe(model), std::move(g.base), std::move(g.mask));
}

LevelMassArray refine(const LevelMassArray& level, const WeightModel& model, unsigned workers) {
  CascadeConfig config = level.config();
  config.depth += 1;
  const std::size_t cells = materialized_cells(config.base, config.depth);
  const int ell = config.base.ell();
  const std::size_t uell = static_cast<std::size_t>(ell);
  const WeightSampler sampler(model);
  std::vector<double> out(cells, kNegInf);
  std::vector<std::uint8_t> mask(cells, 1);

  // Keys of every parent cell, generation by generation.
  std::vector<std::uint64_t> keys{root_key(config.seed, config.replica)};
  for (int k = 0; k < level.depth(); ++k) {
    std::vector<std::uint64_t> next(keys.size() * uell);
    parallel_for(keys.size(), workers, [&](std::size_t i) {
      for (std::size_t j = 0; j < uell; ++j) next[i * uell + j] = child_key(keys[i], static_cast<unsigned>(j));
    });
    keys = std::move(next);
  }
  parallel_for(level.size(), workers, [&](std::size_t i) {
    if (level.is_zero(i)) return;
    for (std::size_t j = 0; j < uell; ++j) {
      const double lw = sampler.log_weight(key_uniform(child_key(keys[i], static_cast<unsigned>(j))));
      if (lw == kNegInf) continue;
      out[i * uell + j] = level.log_density(i) + lw;
      mask[i * uell + j] = 0;
    }
  });
  return LevelMassArray(config, level.model_descriptor(), std::move(out), std::move(mask));
}

double total_mass(const LevelMassArray& level) {
  const auto values = level.log_densities();
  const double top = *std::max_element(values.begin(), values.end());
  if (top == kNegInf) return 0.0;
  detail::CompensatedSum sum;
  for (double x : values) {
    if (x != kNegInf) sum.add(std::exp(x - top));
  }
  return sum.value() * std::exp(top) / integer_power(level.ell(), level.depth());
}

double partition_log_sum(const LevelMassArray& level, double q) {
  const auto values = level.log_densities();
  double top = kNegInf;
  for (double x : values) {
    if (x != kNegInf) top = std::max(top, q * x);
  }
  if (top == kNegInf) return kNegInf;
  detail::CompensatedSum sum;
  for (double x : values) {
    if (x != kNegInf) sum.add(std::exp(q * x - top));
  }
  return top + std::log(sum.value()) - q * level.depth() * level.config().base.log_ell();
}

MartingaleTrace martingale_trace(const CascadeConfig& config, const WeightModel& model) {
  if (config.depth < 1) throw CascadeError(ErrorCode::InvalidParameter, "depth must be >= 1");
  const WeightSampler sampler(model);
  const int ell = config.base.ell();
  std::vector<detail::CompensatedSum> sums(static_cast<std::size_t>(config.depth));
  auto visit = [&sums](int depth, double log_density) {
    sums[static_cast<std::size_t>(depth - 1)].add(std::exp(log_density));
  };
  walk_nonzero(sampler, ell, config.depth, root_key(config.seed, config.replica), 0.0, 0, visit);

  MartingaleTrace trace;
  trace.values.reserve(sums.size());
  double scale = 1.0;
  for (const auto& s : sums) {
    scale *= ell;
    trace.values.push_back(s.value() / scale);
  }
  return trace;
}

PathSampler::PathSampler(const LevelMassArray& level) : ell_(level.ell()), depth_(level.depth()) {
  const std::size_t uell = static_cast<std::size_t>(ell_);
  pyramid_.resize(static_cast<std::size_t>(depth_) + 1);
  pyramid_.back().assign(level.log_densities().begin(), level.log_densities().end());
  for (int k = depth_ - 1; k >= 0; --k) {
    const auto& below = pyramid_[static_cast<std::size_t>(k) + 1];
    auto& here = pyramid_[static_cast<std::size_t>(k)];
    here.resize(below.size() / uell);
    for (std::size_t i = 0; i < here.size(); ++i) {
      detail::LogSumAccumulator acc;
      for (std::size_t j = 0; j < uell; ++j) acc.add(below[i * uell + j]);
      here[i] = acc.value();
    }
  }
  if (pyramid_.front().front() == kNegInf) {
    throw CascadeError(ErrorCode::ZeroTotalMass, "cannot sample from an all-zero level");
  }
}

std::size_t PathSampler::sample_index(std::uint64_t sample_seed) const {
  CounterStream stream(sample_seed);
  const std::size_t uell = static_cast<std::size_t>(ell_);
  std::vector<double> weights(uell);
  std::size_t index = 0;
  for (int k = 0; k < depth_; ++k) {
    const auto& below = pyramid_[static_cast<std::size_t>(k) + 1];
    const std::size_t first = index * uell;
    double top = kNegInf;
    for (std::size_t j = 0; j < uell; ++j) top = std::max(top, below[first + j]);
    double total = 0.0;
    for (std::size_t j = 0; j < uell; ++j) {
      weights[j] = below[first + j] == kNegInf ? 0.0 : std::exp(below[first + j] - top);
      total += weights[j];
    }
    const double target = stream.next_uniform() * total;
    std::size_t chosen = uell;
    double cum = 0.0;
    for (std::size_t j = 0; j < uell; ++j) {
      if (weights[j] == 0.0) continue;
      cum += weights[j];
      chosen = j;
      if (target < cum) break;
    }
    index = first + chosen;
  }
  return index;
}

NodePath PathSampler::sample(std::uint64_t sample_seed) const {
  std::size_t index = sample_index(sample_seed);
  NodePath path;
  path.digits.resize(static_cast<std::size_t>(depth_));
  for (int k = depth_ - 1; k >= 0; --k) {
    path.digits[static_cast<std::size_t>(k)] = static_cast<int>(index % static_cast<std::size_t>(ell_));
    index /= static_cast<std::size_t>(ell_);
  }
  return path;
}

NodePath sample_point(const LevelMassArray& level, std::uint64_t sample_seed) {
  return PathSampler(level).sample(sample_seed);
}

CoupledCascade coupled_generate(const CascadeConfig& config, const WeightModel& model, double q, unsigned workers) {
  double shift = 0.0;
  try {
    shift = ln_moment(model, q);
  } catch (const CascadeError& e) {
    if (e.code() == ErrorCode::NegativeMomentOfZeroAtom) throw CascadeError(ErrorCode::MomentInfinite, e.what());
    throw;
  }
  if (!std::isfinite(shift)) throw CascadeError(ErrorCode::MomentInfinite, "E[W^q] is not finite and positive");
  Generated g = generate_impl(config, model, true, q, shift, workers);
  nlohmann::json tilted_descriptor{{"tilt_of", to_json(model)}, {"q", q}};
  std::vector<std::uint8_t> tilted_mask = g.mask;
  return CoupledCascade{
      LevelMassArray(config, describe(model), std::move(g.base), std::move(g.mask)),
      LevelMassArray(config, tilted_descriptor.dump(), std::move(g.tilted), std::move(tilted_mask)),
      q,
  };
}

PartitionSums stream_partition_sums(const CascadeConfig& config, const WeightModel& model,
                                    std::span<const double> q_grid, int max_depth) {
  if (max_depth < 1) throw CascadeError(ErrorCode::InvalidParameter, "max_depth must be >= 1");
  const WeightSampler sampler(model);
  const std::size_t nq = q_grid.size();
  std::vector<detail::LogSumAccumulator> acc(static_cast<std::size_t>(max_depth) * nq);
  auto visit = [&](int depth, double log_density) {
    detail::LogSumAccumulator* row = acc.data() + static_cast<std::size_t>(depth - 1) * nq;
    for (std::size_t i = 0; i < nq; ++i) row[i].add(q_grid[i] * log_density);
  };
  walk_nonzero(sampler, config.base.ell(), max_depth, root_key(config.seed, config.replica), 0.0, 0, visit);

  PartitionSums sums;
  sums.q_grid.assign(q_grid.begin(), q_grid.end());
  sums.base = config.base;
  sums.log_sums.resize(static_cast<std::size_t>(max_depth));
  for (int k = 1; k <= max_depth; ++k) {
    auto& row = sums.log_sums[static_cast<std::size_t>(k - 1)];
    row.resize(nq);
    for (std::size_t i = 0; i < nq; ++i) {
      const double lse = acc[static_cast<std::size_t>(k - 1) * nq + i].value();
      row[i] = lse == kNegInf ? kNegInf : lse - q_grid[i] * k * config.base.log_ell();
    }
  }
  return sums;
}

}  // namespace cascadelab
