#ifndef MOUSTACHE_VERIFY_HPP
#define MOUSTACHE_VERIFY_HPP

#include <functional>
#include <string>
#include <vector>

#include "io.hpp"

namespace moustache {

struct CriterionResult {
  std::string id;
  std::string title;
  bool pass = false;
  /// Diagnostics are reported but never fail the suite.
  bool asserted = true;
  std::string detail;
  double seconds = 0.0;
};

using CriterionCallback = std::function<void(const CriterionResult&)>;

/// "PASS A3 ..." style line for one result.
std::string format_result(const CriterionResult& r);

/// Runs suite "exact" (closed-form identities, seconds) or "acceptance"
/// (the full Monte Carlo criteria, minutes). Seed, workers, integrator
/// settings and the tail ratio band come from cfg; sample sizes are fixed
/// by the suite. Calls `on_result` as each criterion finishes.
std::vector<CriterionResult> run_suite(const std::string& suite, const ExperimentConfig& cfg,
                                       const CriterionCallback& on_result = {});

/// True when every asserted criterion passed.
bool suite_passed(const std::vector<CriterionResult>& results);

}  // namespace moustache

#endif
