#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace cascadelab {

enum class TableKind { Analytic, Empirical };
enum class SpectrumKind { Coarse, Legendre };

std::string_view to_string(TableKind kind) noexcept;
std::string_view to_string(SpectrumKind kind) noexcept;

/// tau (analytic) or its finite-depth estimate (empirical) on a q grid.
struct StructureFunctionTable {
  std::vector<double> q_grid;
  std::vector<double> values;
  TableKind kind = TableKind::Analytic;
  std::optional<int> depth;
};

/// Spectrum value per beta. Empty coarse bins hold -infinity.
struct SpectrumEstimate {
  std::vector<double> beta_grid;
  std::vector<double> values;
  SpectrumKind kind = SpectrumKind::Coarse;
  std::optional<int> depth;
  std::optional<double> epsilon;
  // Set when the input table needed a convex projection before transforming.
  bool convexified = false;
};

/// Y_1, ..., Y_n for one replica.
struct MartingaleTrace {
  std::vector<double> values;

  int depth() const noexcept { return static_cast<int>(values.size()); }
  double final_mass() const { return values.back(); }
};

struct MassStatistics {
  double q = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double standard_error = 0.0;
  std::size_t replica_count = 0;
  double extinct_fraction = 0.0;
  int depth = 0;
  std::size_t exact_zero_count = 0;
  std::size_t below_threshold_count = 0;
  // Replicas left out of mean/variance (extinct replicas when q <= 0).
  std::size_t excluded_count = 0;
};

}  // namespace cascadelab
