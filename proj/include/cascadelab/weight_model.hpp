#pragma once

#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace cascadelab {

/// P[W = 1/p] = p, P[W = 0] = 1 - p.
struct BirthDeath {
  double p = 1.0;
};

/// W = exp(sigma N - sigma^2 / 2) with N standard normal.
struct LogNormal {
  double sigma = 1.0;
};

struct Atom {
  double value = 0.0;
  double prob = 0.0;
};

/// Finitely supported weight law. After validate() the atoms are sorted by
/// value and carry strictly positive probability.
struct DiscreteAtoms {
  std::vector<Atom> atoms;
};

/// A mean-one weight law.
using WeightModel = std::variant<BirthDeath, LogNormal, DiscreteAtoms>;

/// Number of children per node of the tree.
class BranchingBase {
 public:
  explicit BranchingBase(int ell);

  int ell() const noexcept { return ell_; }
  double log_ell() const noexcept { return log_ell_; }

  friend bool operator==(const BranchingBase& a, const BranchingBase& b) noexcept {
    return a.ell_ == b.ell_;
  }

 private:
  int ell_;
  double log_ell_;
};

inline constexpr double kMeanTolerance = 1e-12;

/// Checks parameters and the mean-one constraint; normalizes atom lists.
/// Throws CascadeError{InvalidParameter | MeanNotOne}.
WeightModel validate(WeightModel model);

/// P[W = 0].
double zero_probability(const WeightModel& model);

/// True when W has an atom at zero, i.e. negative moments are infinite.
bool has_zero_atom(const WeightModel& model);

/// E[W^q] with the convention 0^q = 0 (so E[W^0] = P[W != 0]).
///
/// BirthDeath uses its closed form p^{1-q} for every real q. DiscreteAtoms
/// with a zero atom throws NegativeMomentOfZeroAtom for q < 0. The value may
/// overflow to +inf for large |q|; ln_moment does not.
double moment(const WeightModel& model, double q);

/// ln E[W^q], evaluated without forming E[W^q].
double ln_moment(const WeightModel& model, double q);

/// E[W^q ln W] (natural log), same conventions as moment().
double log_moment(const WeightModel& model, double q);

/// E[W^q ln W] / E[W^q]: the mean of ln W under the q-tilted law.
double tilted_log_mean(const WeightModel& model, double q);

/// Variance of ln W under the q-tilted law.
double tilted_log_variance(const WeightModel& model, double q);

/// Law of W' = W^q / E[W^q]. The result passes validate().
/// Throws MomentInfinite or ZeroMoment.
WeightModel tilt(const WeightModel& model, double q);

/// Descriptor JSON: {"kind":"birthdeath","p":..} | {"kind":"lognormal","sigma":..}
/// | {"kind":"discrete","atoms":[[v,prob],...]}.
nlohmann::json to_json(const WeightModel& model);

/// Parses and validates a descriptor. Throws InvalidParameter on bad input.
WeightModel model_from_json(const nlohmann::json& descriptor);
WeightModel parse_model(const std::string& text);

std::string describe(const WeightModel& model);

}  // namespace cascadelab
