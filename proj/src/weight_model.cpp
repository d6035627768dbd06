#include "cascadelab/weight_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cascadelab/error.hpp"

namespace cascadelab {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void invalid(const std::string& message) {
  throw CascadeError(ErrorCode::InvalidParameter, message);
}

void require_negative_moment_defined(const DiscreteAtoms& d, double q) {
  if (q < 0.0 && !d.atoms.empty() && d.atoms.front().value == 0.0) {
    throw CascadeError(ErrorCode::NegativeMomentOfZeroAtom,
                       "E[W^q] is infinite for q < 0 when P[W=0] > 0");
  }
}

// Weights of the q-tilted law over the nonzero atoms, normalized to sum 1.
std::vector<double> tilted_atom_weights(const DiscreteAtoms& d, double q) {
  require_negative_moment_defined(d, q);
  std::vector<double> logs;
  logs.reserve(d.atoms.size());
  for (const Atom& a : d.atoms) {
    if (a.value > 0.0) logs.push_back(std::log(a.prob) + q * std::log(a.value));
  }
  const double top = *std::max_element(logs.begin(), logs.end());
  double total = 0.0;
  for (double& x : logs) {
    x = std::exp(x - top);
    total += x;
  }
  for (double& x : logs) x /= total;
  return logs;
}

}  // namespace

BranchingBase::BranchingBase(int ell) : ell_(ell), log_ell_(std::log(static_cast<double>(ell))) {
  if (ell < 2) invalid("ell must be >= 2, got " + std::to_string(ell));
}

WeightModel validate(WeightModel model) {
  return std::visit(
      Overloaded{
          [](BirthDeath m) -> WeightModel {
            if (!(m.p > 0.0 && m.p <= 1.0)) invalid("birth-death p must lie in (0,1]");
            return m;
          },
          [](LogNormal m) -> WeightModel {
            if (!(m.sigma > 0.0) || !std::isfinite(m.sigma)) invalid("log-normal sigma must be > 0");
            return m;
          },
          [](DiscreteAtoms m) -> WeightModel {
            DiscreteAtoms out;
            double prob_sum = 0.0;
            for (const Atom& a : m.atoms) {
              if (!std::isfinite(a.value) || a.value < 0.0) invalid("atom values must be finite and >= 0");
              if (!(a.prob >= 0.0 && a.prob <= 1.0)) invalid("atom probabilities must lie in [0,1]");
              prob_sum += a.prob;
              if (a.prob > 0.0) out.atoms.push_back(a);
            }
            if (out.atoms.empty()) invalid("discrete law needs at least one atom of positive probability");
            if (std::abs(prob_sum - 1.0) > kMeanTolerance) invalid("atom probabilities must sum to 1");
            std::stable_sort(out.atoms.begin(), out.atoms.end(),
                             [](const Atom& a, const Atom& b) { return a.value < b.value; });
            // Merge repeated values so that inverse-CDF sampling sees one step per value.
            std::vector<Atom> merged;
            for (const Atom& a : out.atoms) {
              if (!merged.empty() && merged.back().value == a.value) {
                merged.back().prob += a.prob;
              } else {
                merged.push_back(a);
              }
            }
            out.atoms = std::move(merged);
            double mean = 0.0;
            for (const Atom& a : out.atoms) mean += a.prob * a.value;
            if (std::abs(mean - 1.0) > kMeanTolerance) {
              std::ostringstream os;
              os.precision(17);
              os << "E[W] = " << mean;
              throw CascadeError(ErrorCode::MeanNotOne, os.str());
            }
            return out;
          },
      },
      std::move(model));
}

double zero_probability(const WeightModel& model) {
  return std::visit(Overloaded{
                        [](const BirthDeath& m) { return 1.0 - m.p; },
                        [](const LogNormal&) { return 0.0; },
                        [](const DiscreteAtoms& m) {
                          return m.atoms.front().value == 0.0 ? m.atoms.front().prob : 0.0;
                        },
                    },
                    model);
}

bool has_zero_atom(const WeightModel& model) { return zero_probability(model) > 0.0; }

double ln_moment(const WeightModel& model, double q) {
  if (q == 1.0) return 0.0;
  return std::visit(Overloaded{
                        [q](const BirthDeath& m) { return (1.0 - q) * std::log(m.p); },
                        [q](const LogNormal& m) { return 0.5 * m.sigma * m.sigma * (q * q - q); },
                        [q](const DiscreteAtoms& m) {
                          require_negative_moment_defined(m, q);
                          double top = -std::numeric_limits<double>::infinity();
                          for (const Atom& a : m.atoms) {
                            if (a.value > 0.0) top = std::max(top, std::log(a.prob) + q * std::log(a.value));
                          }
                          double total = 0.0;
                          for (const Atom& a : m.atoms) {
                            if (a.value > 0.0) total += std::exp(std::log(a.prob) + q * std::log(a.value) - top);
                          }
                          return top + std::log(total);
                        },
                    },
                    model);
}

double moment(const WeightModel& model, double q) {
  if (q == 1.0) return 1.0;
  if (const auto* d = std::get_if<DiscreteAtoms>(&model)) {
    require_negative_moment_defined(*d, q);
    double total = 0.0;
    for (const Atom& a : d->atoms) {
      if (a.value > 0.0) total += a.prob * std::pow(a.value, q);
    }
    return total;
  }
  return std::exp(ln_moment(model, q));
}

double tilted_log_mean(const WeightModel& model, double q) {
  return std::visit(Overloaded{
                        [](const BirthDeath& m) { return -std::log(m.p); },
                        [q](const LogNormal& m) { return m.sigma * m.sigma * (q - 0.5); },
                        [q](const DiscreteAtoms& m) {
                          const std::vector<double> w = tilted_atom_weights(m, q);
                          double mean = 0.0;
                          std::size_t i = 0;
                          for (const Atom& a : m.atoms) {
                            if (a.value > 0.0) mean += w[i++] * std::log(a.value);
                          }
                          return mean;
                        },
                    },
                    model);
}

double tilted_log_variance(const WeightModel& model, double q) {
  return std::visit(Overloaded{
                        [](const BirthDeath&) { return 0.0; },
                        [](const LogNormal& m) { return m.sigma * m.sigma; },
                        [q](const DiscreteAtoms& m) {
                          const std::vector<double> w = tilted_atom_weights(m, q);
                          double mean = 0.0;
                          std::size_t i = 0;
                          for (const Atom& a : m.atoms) {
                            if (a.value > 0.0) mean += w[i++] * std::log(a.value);
                          }
                          double var = 0.0;
                          i = 0;
                          for (const Atom& a : m.atoms) {
                            if (a.value > 0.0) {
                              const double d = std::log(a.value) - mean;
                              var += w[i++] * d * d;
                            }
                          }
                          return var;
                        },
                    },
                    model);
}

double log_moment(const WeightModel& model, double q) {
  if (const auto* d = std::get_if<DiscreteAtoms>(&model)) {
    require_negative_moment_defined(*d, q);
    double total = 0.0;
    for (const Atom& a : d->atoms) {
      if (a.value > 0.0) total += a.prob * std::pow(a.value, q) * std::log(a.value);
    }
    return total;
  }
  return moment(model, q) * tilted_log_mean(model, q);
}

WeightModel tilt(const WeightModel& model, double q) {
  if (q == 1.0) return model;
  if (const auto* d = std::get_if<DiscreteAtoms>(&model); d && q < 0.0 && has_zero_atom(model)) {
    throw CascadeError(ErrorCode::MomentInfinite, "E[W^q] is infinite for q < 0 when P[W=0] > 0");
  }
  const double ln_mq = ln_moment(model, q);
  if (!std::isfinite(ln_mq)) {
    if (ln_mq < 0.0) throw CascadeError(ErrorCode::ZeroMoment, "E[W^q] = 0");
    throw CascadeError(ErrorCode::MomentInfinite, "E[W^q] is infinite");
  }
  return std::visit(Overloaded{
                        [](const BirthDeath& m) -> WeightModel { return m; },
                        [q](const LogNormal& m) -> WeightModel {
                          const double s = std::abs(q) * m.sigma;
                          if (s == 0.0) return DiscreteAtoms{{{1.0, 1.0}}};
                          return LogNormal{s};
                        },
                        [q, ln_mq](const DiscreteAtoms& m) -> WeightModel {
                          DiscreteAtoms out;
                          for (const Atom& a : m.atoms) {
                            const double v = a.value > 0.0 ? std::exp(q * std::log(a.value) - ln_mq) : 0.0;
                            out.atoms.push_back({v, a.prob});
                          }
                          return validate(std::move(out));
                        },
                    },
                    model);
}

nlohmann::json to_json(const WeightModel& model) {
  return std::visit(Overloaded{
                        [](const BirthDeath& m) { return nlohmann::json{{"kind", "birthdeath"}, {"p", m.p}}; },
                        [](const LogNormal& m) { return nlohmann::json{{"kind", "lognormal"}, {"sigma", m.sigma}}; },
                        [](const DiscreteAtoms& m) {
                          nlohmann::json atoms = nlohmann::json::array();
                          for (const Atom& a : m.atoms) atoms.push_back({a.value, a.prob});
                          return nlohmann::json{{"kind", "discrete"}, {"atoms", atoms}};
                        },
                    },
                    model);
}

WeightModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    invalid("model descriptor must be an object with a string \"kind\"");
  }
  const std::string kind = j["kind"].get<std::string>();
  auto number = [&j](const char* key) {
    if (!j.contains(key) || !j[key].is_number()) invalid(std::string("model descriptor needs numeric \"") + key + "\"");
    return j[key].get<double>();
  };
  if (kind == "birthdeath") return validate(BirthDeath{number("p")});
  if (kind == "lognormal") return validate(LogNormal{number("sigma")});
  if (kind == "discrete") {
    if (!j.contains("atoms") || !j["atoms"].is_array()) invalid("discrete descriptor needs an \"atoms\" array");
    DiscreteAtoms d;
    for (const auto& pair : j["atoms"]) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
        invalid("each atom must be [value, prob]");
      }
      d.atoms.push_back({pair[0].get<double>(), pair[1].get<double>()});
    }
    return validate(std::move(d));
  }
  invalid("unknown model kind \"" + kind + "\"");
}

WeightModel parse_model(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) invalid("model descriptor is not valid JSON");
  return model_from_json(j);
}

std::string describe(const WeightModel& model) { return to_json(model).dump(); }

}  // namespace cascadelab
