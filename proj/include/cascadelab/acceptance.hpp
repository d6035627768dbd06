#pragma once

#include <functional>
#include <string>
#include <vector>

namespace cascadelab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  // Ten times fewer replicas for the replica-heavy criteria; their absolute
  // tolerances widen by sqrt(10).
  bool quick = false;
  unsigned workers = 1;
  // Run only these criteria (1-based); empty runs all of them.
  std::vector<int> only;
  std::function<void(const CriterionResult&)> on_result;
};

inline constexpr int kCriterionCount = 13;

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options);

/// "PASS 03 martingale-mean  mean=... (1.2 s)"
std::string format_result(const CriterionResult& result);

}  // namespace cascadelab
