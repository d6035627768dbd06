// cascadelab: command-line front end for cascade experiments.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>

#include "cascadelab/acceptance.hpp"
#include "cascadelab/engine.hpp"
#include "cascadelab/error.hpp"
#include "cascadelab/estimators.hpp"
#include "cascadelab/experiment.hpp"
#include "cascadelab/parallel.hpp"
#include "cascadelab/rng.hpp"
#include "cascadelab/snapshot.hpp"
#include "cascadelab/theory.hpp"

namespace cl = cascadelab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitAcceptance = 4;

// Flags as parsed; only those given on the command line override the config file.
struct Flags {
  std::optional<std::string> config_path;
  std::optional<std::string> model;
  std::optional<int> ell;
  std::optional<int> depth;
  std::optional<std::size_t> replicas;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> q_grid;
  std::optional<std::string> beta_grid;
  std::optional<double> epsilon;
  std::optional<std::size_t> sample_count;
  std::optional<std::string> out;
  std::optional<unsigned> workers;
  std::optional<double> q;
  std::optional<double> zero_threshold;
  bool quick = false;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config_path, "JSON file whose keys mirror these flags");
  sub->add_option("--model", f.model, "weight law descriptor JSON");
  sub->add_option("--ell", f.ell, "branching number");
  sub->add_option("--workers", f.workers, "worker threads (output does not depend on it)");
}

void add_experiment(CLI::App* sub, Flags& f) {
  sub->add_option("--depth", f.depth, "cascade depth n");
  sub->add_option("--replicas", f.replicas, "independent replicas");
  sub->add_option("--seed", f.seed, "master seed");
  sub->add_option("--out", f.out, "output directory (CASCADELAB_OUT overrides)");
}

template <class T, class U>
void override_with(T& field, const std::optional<U>& flag) {
  if (flag) field = *flag;
}

cl::ExperimentConfig resolve(const Flags& f) {
  cl::ExperimentConfig config;
  if (f.config_path) cl::apply_config_file(config, *f.config_path);
  override_with(config.model, f.model);
  override_with(config.ell, f.ell);
  override_with(config.depth, f.depth);
  override_with(config.replicas, f.replicas);
  override_with(config.seed, f.seed);
  override_with(config.q_grid, f.q_grid);
  override_with(config.beta_grid, f.beta_grid);
  override_with(config.epsilon, f.epsilon);
  override_with(config.sample_count, f.sample_count);
  if (f.out) config.output_directory = *f.out;
  override_with(config.workers, f.workers);
  override_with(config.q, f.q);
  override_with(config.zero_threshold, f.zero_threshold);
  if (const char* env = std::getenv("CASCADELAB_OUT"); env && *env) config.output_directory = env;
  if (config.workers == 0) config.workers = cl::hardware_workers();
  cl::check_config(config);
  return config;
}

std::filesystem::path prepare_output(const cl::ExperimentConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.output_directory, ec);
  if (ec) {
    throw cl::CascadeError(cl::ErrorCode::IoFailure,
                           "cannot create " + config.output_directory.string() + ": " + ec.message());
  }
  return config.output_directory;
}

std::string num(double v) { return cl::format_double(v); }

std::string optional_num(const std::optional<double>& v) { return v ? num(*v) : "none"; }

int run_theory(const cl::ExperimentConfig& config) {
  const cl::WeightModel model = config.weight_model();
  const cl::BranchingBase base = config.base();
  const cl::TheoryReport r = cl::diagnostics(model, base);
  std::cout << "model " << cl::describe(model) << "\n"
            << "ell " << base.ell() << "\n"
            << "nondegenerate " << (r.nondegenerate ? "true" : "false") << "\n"
            << "mean_w_log_w " << num(r.mean_w_log_w) << "\n"
            << "information_dimension " << optional_num(r.information_dimension) << "\n"
            << "support_dimension " << num(r.support_dimension) << "\n"
            << "lq_bound_sup " << num(r.lq_bound_sup) << "\n"
            << "extinction_probability " << num(r.extinction_probability) << "\n";
  if (r.q_range) {
    std::cout << "q_range " << num(r.q_range->q_min) << " " << num(r.q_range->q_max) << "\n";
  } else {
    std::cout << "q_range none\n";
  }
  const std::vector<double> qs = config.q_values();
  std::vector<double> usable;
  for (double q : qs) {
    if (q >= cl::tau_domain_min(model)) usable.push_back(q);
  }
  std::cout << "\n" << cl::to_csv(cl::analytic_tau_table(model, base, usable));
  return kExitOk;
}

std::vector<cl::MartingaleTrace> traces_for(const cl::ExperimentConfig& config, const cl::WeightModel& model) {
  std::vector<cl::MartingaleTrace> traces(config.replicas);
  cl::parallel_for(config.replicas, config.workers, [&](std::size_t r) {
    traces[r] = cl::martingale_trace(cl::CascadeConfig{config.base(), config.depth, config.seed, r}, model);
  });
  return traces;
}

std::vector<cl::MassStatistics> moment_rows(const cl::ExperimentConfig& config,
                                            std::span<const cl::MartingaleTrace> traces) {
  std::vector<cl::MassStatistics> rows;
  for (double q : config.q_values()) rows.push_back(cl::mass_statistics(traces, q, config.zero_threshold));
  return rows;
}

int run_simulate(const cl::ExperimentConfig& config) {
  const cl::WeightModel model = config.weight_model();
  cl::materialized_cells(config.base(), config.depth);
  const auto dir = prepare_output(config);
  const auto traces = traces_for(config, model);
  for (std::size_t r = 0; r < config.replicas; ++r) {
    const cl::CascadeConfig cc{config.base(), config.depth, config.seed, r};
    const cl::LevelMassArray level = cl::generate(cc, model, config.workers);
    const std::string stem = "replica_" + std::to_string(r);
    const cl::SnapshotMetadata meta = cl::save_snapshot(level, dir / (stem + ".mcas"));
    cl::export_csv(traces[r], dir / (stem + "_trace.csv"));
    std::cout << stem << " total_mass " << num(meta.total_mass) << " sha256 " << meta.digest << "\n";
  }
  cl::export_csv(std::span<const cl::MassStatistics>(moment_rows(config, traces)), dir / "mass_statistics.csv");
  return kExitOk;
}

int run_analyze(const cl::ExperimentConfig& config) {
  const cl::WeightModel model = config.weight_model();
  const cl::BranchingBase base = config.base();
  const auto dir = prepare_output(config);
  const std::vector<double> qs = config.q_values();

  std::vector<std::vector<double>> rows(config.replicas);
  cl::parallel_for(config.replicas, config.workers, [&](std::size_t r) {
    const cl::PartitionSums sums =
        cl::stream_partition_sums(cl::CascadeConfig{base, config.depth, config.seed, r}, model, qs, config.depth);
    rows[r] = cl::empirical_tau(sums, config.depth).values;
  });
  cl::StructureFunctionTable empirical{qs, std::vector<double>(qs.size(), 0.0), cl::TableKind::Empirical,
                                       config.depth};
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < qs.size(); ++i) empirical.values[i] += row[i] / static_cast<double>(rows.size());
  }
  cl::export_csv(empirical, dir / "tau_empirical.csv");

  std::cout << "q tau_empirical tau_analytic\n";
  std::vector<double> analytic_q;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    std::string exact = "inf";
    if (qs[i] >= cl::tau_domain_min(model)) {
      analytic_q.push_back(qs[i]);
      exact = num(cl::tau(model, base, qs[i]));
    }
    std::cout << num(qs[i]) << " " << num(empirical.values[i]) << " " << exact << "\n";
  }
  cl::StructureFunctionTable analytic = cl::analytic_tau_table(model, base, analytic_q);
  cl::export_csv(analytic, dir / "tau_analytic.csv");

  if (std::pow(static_cast<double>(base.ell()), config.depth) <= static_cast<double>(cl::kMaxMaterializedCells)) {
    std::vector<cl::ExponentEstimate> per_replica;
    for (std::size_t r = 0; r < config.replicas; ++r) {
      const cl::LevelMassArray level =
          cl::generate(cl::CascadeConfig{base, config.depth, config.seed, r}, model, config.workers);
      if (cl::total_mass(level) == 0.0) continue;
      per_replica.push_back(cl::dimension_estimate(level, config.sample_count, cl::derive_seed(config.seed, 1, r)));
    }
    if (per_replica.empty()) {
      std::cerr << "dimension: every replica is extinct\n";
    } else {
      const cl::ExponentEstimate pooled = cl::pool_replicas(per_replica);
      std::cout << "dimension_estimate " << num(pooled.mean) << " se " << num(pooled.standard_error) << "\n";
    }
  }

  const auto traces = traces_for(config, model);
  cl::export_csv(std::span<const cl::MassStatistics>(moment_rows(config, traces)), dir / "mass_statistics.csv");
  try {
    const cl::DegeneracyVerdict v = cl::degeneracy_probe(traces, base);
    std::cout << "degeneracy " << cl::to_string(v.verdict) << " slope " << num(v.slope) << " se "
              << num(v.slope_standard_error) << "\n";
  } catch (const cl::CascadeError& e) {
    if (e.code() != cl::ErrorCode::InsufficientData) throw;
    std::cerr << "degeneracy probe skipped: " << e.what() << "\n";
  }
  return kExitOk;
}

int run_spectrum(const cl::ExperimentConfig& config) {
  const cl::WeightModel model = config.weight_model();
  const cl::BranchingBase base = config.base();
  const auto dir = prepare_output(config);
  const cl::LevelMassArray level =
      cl::generate(cl::CascadeConfig{base, config.depth, config.seed, 0}, model, config.workers);
  const std::vector<double> betas = config.beta_values();
  const cl::SpectrumEstimate coarse = cl::coarse_spectrum(level, betas, config.epsilon);
  const cl::SpectrumEstimate fitted = cl::legendre_spectrum(cl::empirical_tau(level, config.q_values()));

  cl::SpectrumEstimate analytic{betas, {}, cl::SpectrumKind::Legendre, std::nullopt, std::nullopt, false};
  for (double b : betas) analytic.values.push_back(cl::legendre(model, base, b));

  cl::export_csv(coarse, dir / "spectrum_coarse.csv");
  cl::export_csv(fitted, dir / "spectrum_legendre.csv");
  cl::export_csv(analytic, dir / "spectrum_analytic.csv");
  std::cout << "beta coarse legendre_fit tau_star\n";
  for (std::size_t i = 0; i < betas.size(); ++i) {
    std::cout << num(betas[i]) << " " << num(coarse.values[i]) << " " << num(cl::interpolate_spectrum(fitted, betas[i]))
              << " " << num(analytic.values[i]) << "\n";
  }
  if (fitted.convexified) std::cerr << "note: empirical tau was projected to a convex shape\n";
  return kExitOk;
}

int run_couple(const cl::ExperimentConfig& config) {
  const cl::WeightModel model = config.weight_model();
  const cl::BranchingBase base = config.base();
  std::vector<cl::ExponentEstimate> per_replica;
  for (std::size_t r = 0; r < config.replicas; ++r) {
    const cl::CoupledCascade coupled =
        cl::coupled_generate(cl::CascadeConfig{base, config.depth, config.seed, r}, model, config.q, config.workers);
    if (cl::total_mass(coupled.tilted_level) == 0.0) continue;
    per_replica.push_back(
        cl::simultaneous_exponent(coupled, config.sample_count, cl::derive_seed(config.seed, 2, r)));
  }
  if (per_replica.empty()) throw cl::CascadeError(cl::ErrorCode::ZeroTotalMass, "every tilted replica is extinct");
  const cl::ExponentEstimate pooled = cl::pool_replicas(per_replica);
  const double beta = -cl::tau_prime(model, base, config.q);
  std::cout << "q " << num(config.q) << "\n"
            << "target_beta " << num(beta) << "\n"
            << "tau_star " << num(cl::legendre(model, base, beta)) << "\n"
            << "estimated_beta " << num(pooled.mean) << " se " << num(pooled.standard_error) << " samples "
            << pooled.sample_count << "\n";
  return kExitOk;
}

int run_verify(const cl::ExperimentConfig& config, bool quick) {
  cl::AcceptanceOptions options;
  options.quick = quick;
  options.workers = config.workers;
  options.on_result = [](const cl::CriterionResult& r) { std::cout << cl::format_result(r) << std::endl; };
  const auto results = cl::run_acceptance(options);
  std::size_t failed = 0;
  for (const auto& r : results) failed += r.passed ? 0 : 1;
  std::cout << (failed == 0 ? "all " : "") << results.size() - failed << " of " << results.size()
            << " criteria passed\n";
  return failed == 0 ? kExitOk : kExitAcceptance;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiplicative cascade simulation and estimation"};
  app.require_subcommand(1);
  Flags f;

  auto* theory = app.add_subcommand("theory", "closed-form diagnostics and analytic tau table");
  add_common(theory, f);
  theory->add_option("--q-grid", f.q_grid, "q grid start:stop:step");

  auto* simulate = app.add_subcommand("simulate", "generate replicas, write snapshots and traces");
  add_common(simulate, f);
  add_experiment(simulate, f);
  simulate->add_option("--q-grid", f.q_grid, "moment orders for mass statistics");
  simulate->add_option("--zero-threshold", f.zero_threshold, "masses below this count as extinct");

  auto* analyze = app.add_subcommand("analyze", "empirical tau, dimension, mass statistics, degeneracy");
  add_common(analyze, f);
  add_experiment(analyze, f);
  analyze->add_option("--q-grid", f.q_grid, "q grid start:stop:step");
  analyze->add_option("--samples", f.sample_count, "sampled points per replica");
  analyze->add_option("--zero-threshold", f.zero_threshold, "masses below this count as extinct");

  auto* spectrum = app.add_subcommand("spectrum", "coarse and Legendre spectra against tau*");
  add_common(spectrum, f);
  add_experiment(spectrum, f);
  spectrum->add_option("--q-grid", f.q_grid, "q grid for the Legendre fit");
  spectrum->add_option("--beta-grid", f.beta_grid, "beta grid start:stop:step");
  spectrum->add_option("--epsilon", f.epsilon, "coarse bin half-width");

  auto* couple = app.add_subcommand("couple", "tilted cascade exponent estimate");
  add_common(couple, f);
  add_experiment(couple, f);
  couple->add_option("--q", f.q, "tilt parameter")->required();
  couple->add_option("--samples", f.sample_count, "sampled points per replica");

  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  verify->add_option("--workers", f.workers, "worker threads");
  verify->add_option("--config", f.config_path, "JSON config (only workers is used)");
  verify->add_flag("--quick", f.quick, "ten times fewer replicas, widened tolerances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    const cl::ExperimentConfig config = resolve(f);
    if (*theory) return run_theory(config);
    if (*simulate) return run_simulate(config);
    if (*analyze) return run_analyze(config);
    if (*spectrum) return run_spectrum(config);
    if (*couple) return run_couple(config);
    if (*verify) return run_verify(config, f.quick);
  } catch (const cl::CascadeError& e) {
    std::cerr << "cascadelab: " << e.what() << "\n";
    return cl::is_configuration_error(e.code()) ? kExitConfig : kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "cascadelab: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitConfig;
}
