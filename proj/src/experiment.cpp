#include "cascadelab/experiment.hpp"

#include <cmath>
#include <charconv>
#include <fstream>
#include <set>

#include "cascadelab/error.hpp"

namespace cascadelab {

namespace {

double parse_number(std::string_view text, const std::string& spec) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || end != text.data() + text.size() || !std::isfinite(value)) {
    throw CascadeError(ErrorCode::InvalidParameter, "bad grid '" + spec + "'");
  }
  return value;
}

[[noreturn]] void bad_key(const std::string& key, const std::string& why) {
  throw CascadeError(ErrorCode::InvalidParameter, "config key '" + key + "': " + why);
}

}  // namespace

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<std::string_view> parts;
  std::string_view rest(spec);
  for (;;) {
    const auto colon = rest.find(':');
    parts.push_back(rest.substr(0, colon));
    if (colon == std::string_view::npos) break;
    rest.remove_prefix(colon + 1);
  }
  if (parts.size() == 1) return {parse_number(parts[0], spec)};
  if (parts.size() != 3) throw CascadeError(ErrorCode::InvalidParameter, "grid must be start:stop:step, got '" + spec + "'");
  const double start = parse_number(parts[0], spec);
  const double stop = parse_number(parts[1], spec);
  const double step = parse_number(parts[2], spec);
  if (!(step > 0.0)) throw CascadeError(ErrorCode::InvalidParameter, "grid step must be positive in '" + spec + "'");
  if (stop < start) throw CascadeError(ErrorCode::InvalidParameter, "grid stop precedes start in '" + spec + "'");
  const double span = (stop - start) / step;
  if (span > 1e6) throw CascadeError(ErrorCode::InvalidParameter, "grid '" + spec + "' has too many points");
  const auto count = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
  std::vector<double> grid(count);
  // start + k * step rather than accumulation, so grid points do not drift.
  for (std::size_t k = 0; k < count; ++k) grid[k] = start + static_cast<double>(k) * step;
  return grid;
}

WeightModel ExperimentConfig::weight_model() const { return parse_model(model); }

void apply_config_json(ExperimentConfig& config, const nlohmann::json& json) {
  if (!json.is_object()) throw CascadeError(ErrorCode::InvalidParameter, "config must be a JSON object");
  for (const auto& [key, value] : json.items()) {
    try {
      if (key == "model") {
        config.model = value.is_string() ? value.get<std::string>() : value.dump();
      } else if (key == "ell") {
        config.ell = value.get<int>();
      } else if (key == "depth") {
        config.depth = value.get<int>();
      } else if (key == "replicas") {
        if (!value.is_number_integer() || value.get<long long>() < 1) bad_key(key, "must be an integer >= 1");
        config.replicas = value.get<std::size_t>();
      } else if (key == "seed") {
        config.seed = value.get<std::uint64_t>();
      } else if (key == "q_grid") {
        config.q_grid = value.get<std::string>();
      } else if (key == "beta_grid") {
        config.beta_grid = value.get<std::string>();
      } else if (key == "epsilon") {
        config.epsilon = value.get<double>();
      } else if (key == "sample_count") {
        config.sample_count = value.get<std::size_t>();
      } else if (key == "out") {
        config.output_directory = value.get<std::string>();
      } else if (key == "workers") {
        config.workers = value.get<unsigned>();
      } else if (key == "q") {
        config.q = value.get<double>();
      } else if (key == "zero_threshold") {
        config.zero_threshold = value.get<double>();
      } else {
        bad_key(key, "unknown");
      }
    } catch (const nlohmann::json::exception& e) {
      bad_key(key, e.what());
    }
  }
}

void apply_config_file(ExperimentConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CascadeError(ErrorCode::IoFailure, "cannot read config " + path.string());
  const nlohmann::json json = nlohmann::json::parse(in, nullptr, false);
  if (json.is_discarded()) throw CascadeError(ErrorCode::InvalidParameter, "config " + path.string() + " is not JSON");
  apply_config_json(config, json);
}

void check_config(const ExperimentConfig& config) {
  if (config.replicas < 1) throw CascadeError(ErrorCode::InvalidParameter, "replicas must be >= 1");
  if (config.depth < 1) throw CascadeError(ErrorCode::InvalidParameter, "depth must be >= 1");
  if (!(config.epsilon > 0.0)) throw CascadeError(ErrorCode::InvalidParameter, "epsilon must be positive");
  (void)config.base();
  (void)config.weight_model();
  (void)config.q_values();
  (void)config.beta_values();
}

}  // namespace cascadelab
