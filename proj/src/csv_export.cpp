#include <cstdio>
#include <string>

#include "cascadelab/records.hpp"
#include "cascadelab/snapshot.hpp"

namespace cascadelab {

std::string_view to_string(TableKind kind) noexcept { return kind == TableKind::Analytic ? "analytic" : "empirical"; }

std::string_view to_string(SpectrumKind kind) noexcept { return kind == SpectrumKind::Coarse ? "coarse" : "legendre"; }

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

std::string optional_field(const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); }
std::string optional_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

std::string to_csv(const StructureFunctionTable& table) {
  std::string out = "q,value,kind,depth\n";
  const std::string kind(to_string(table.kind));
  const std::string depth = optional_field(table.depth);
  for (std::size_t i = 0; i < table.q_grid.size(); ++i) {
    out += format_double(table.q_grid[i]) + ',' + format_double(table.values[i]) + ',' + kind + ',' + depth + '\n';
  }
  return out;
}

std::string to_csv(const SpectrumEstimate& spectrum) {
  std::string out = "beta,value,kind,depth,epsilon\n";
  const std::string kind(to_string(spectrum.kind));
  const std::string depth = optional_field(spectrum.depth);
  const std::string epsilon = optional_field(spectrum.epsilon);
  for (std::size_t i = 0; i < spectrum.beta_grid.size(); ++i) {
    out += format_double(spectrum.beta_grid[i]) + ',' + format_double(spectrum.values[i]) + ',' + kind + ',' +
           depth + ',' + epsilon + '\n';
  }
  return out;
}

std::string to_csv(const MartingaleTrace& trace) {
  std::string out = "depth,Y\n";
  for (std::size_t k = 0; k < trace.values.size(); ++k) {
    out += std::to_string(k + 1) + ',' + format_double(trace.values[k]) + '\n';
  }
  return out;
}

std::string to_csv(std::span<const MassStatistics> rows) {
  std::string out = "q,mean,variance,se,replicas,extinct_fraction,depth\n";
  for (const MassStatistics& s : rows) {
    out += format_double(s.q) + ',' + format_double(s.mean) + ',' + format_double(s.variance) + ',' +
           format_double(s.standard_error) + ',' + std::to_string(s.replica_count) + ',' +
           format_double(s.extinct_fraction) + ',' + std::to_string(s.depth) + '\n';
  }
  return out;
}

void export_csv(const StructureFunctionTable& table, const std::filesystem::path& destination) {
  write_file_atomic(destination, to_csv(table));
}

void export_csv(const SpectrumEstimate& spectrum, const std::filesystem::path& destination) {
  write_file_atomic(destination, to_csv(spectrum));
}

void export_csv(const MartingaleTrace& trace, const std::filesystem::path& destination) {
  write_file_atomic(destination, to_csv(trace));
}

void export_csv(const MassStatistics& stats, const std::filesystem::path& destination) {
  write_file_atomic(destination, to_csv(std::span<const MassStatistics>(&stats, 1)));
}

void export_csv(std::span<const MassStatistics> rows, const std::filesystem::path& destination) {
  write_file_atomic(destination, to_csv(rows));
}

}  // namespace cascadelab
