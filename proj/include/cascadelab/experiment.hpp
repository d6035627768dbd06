#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cascadelab/weight_model.hpp"

namespace cascadelab {

/// "start:stop:step" (stop included when it lies on the lattice) or a single
/// number. Throws InvalidParameter for empty, unordered or malformed grids.
std::vector<double> parse_grid(const std::string& spec);

struct ExperimentConfig {
  std::string model = R"({"kind":"lognormal","sigma":0.5887050112577373})";
  int ell = 2;
  int depth = 12;
  std::size_t replicas = 10;
  std::uint64_t seed = 1;
  std::string q_grid = "-2:3:0.25";
  std::string beta_grid = "0.2:1.6:0.02";
  double epsilon = 0.02;
  std::size_t sample_count = 200;
  std::filesystem::path output_directory = "cascadelab-out";
  unsigned workers = 1;
  double q = 1.5;
  double zero_threshold = 0.0;

  WeightModel weight_model() const;
  BranchingBase base() const { return BranchingBase(ell); }
  std::vector<double> q_values() const { return parse_grid(q_grid); }
  std::vector<double> beta_values() const { return parse_grid(beta_grid); }
};

/// Overwrites fields present in a JSON object whose keys mirror the CLI
/// flags (model, ell, depth, replicas, seed, q_grid, beta_grid, epsilon,
/// sample_count, out, workers, q, zero_threshold). "model" may be an object
/// or a JSON string. Throws InvalidParameter on unknown keys or bad types.
void apply_config_json(ExperimentConfig& config, const nlohmann::json& json);
void apply_config_file(ExperimentConfig& config, const std::filesystem::path& path);

/// Rejects replicas < 1, depth < 1, epsilon <= 0 and unparseable grids or models.
void check_config(const ExperimentConfig& config);

}  // namespace cascadelab
