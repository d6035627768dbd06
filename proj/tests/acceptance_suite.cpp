// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Pass --quick for the thinned variant.

#include <cstring>
#include <iostream>

#include "cascadelab/acceptance.hpp"
#include "cascadelab/parallel.hpp"

int main(int argc, char** argv) {
  cascadelab::AcceptanceOptions options;
  options.workers = cascadelab::hardware_workers();
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--quick") == 0) options.quick = true;
  }
  options.on_result = [](const cascadelab::CriterionResult& r) {
    std::cout << cascadelab::format_result(r) << std::endl;
  };
  const auto results = cascadelab::run_acceptance(options);
  int failed = 0;
  for (const auto& r : results) failed += r.passed ? 0 : 1;
  std::cout << results.size() - static_cast<std::size_t>(failed) << "/" << results.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
