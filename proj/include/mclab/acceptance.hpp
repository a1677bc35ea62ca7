#ifndef MCLAB_ACCEPTANCE_HPP
#define MCLAB_ACCEPTANCE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mclab/report.hpp"

namespace mclab {

struct AcceptanceOptions {
  uint64_t seed = 20240801;
  // Reduced sizes for smoke runs and the reproducibility fingerprint; the
  // official tolerances apply to the full-size run.
  bool quick = false;
};

struct CriterionResult {
  int index = 0;
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  std::vector<VerificationReport> reports;
};

// Runs the 13-point acceptance suite in order.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts);

// One pass/fail line per criterion.
std::string acceptance_summary(const std::vector<CriterionResult>& results);

// Deterministic byte stream produced by a reduced end-to-end pipeline;
// two invocations with the same seed must agree byte for byte.
std::string selftest_fingerprint(uint64_t seed);

}  // namespace mclab

#endif
