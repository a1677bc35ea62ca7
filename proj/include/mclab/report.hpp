#ifndef MCLAB_REPORT_HPP
#define MCLAB_REPORT_HPP

#include <optional>
#include <string>
#include <vector>

namespace mclab {

// One named numeric check. Two flavors:
//  - one-sided bound:   pass <=> value <= bound * (1 + tolerance)
//  - residual:          pass <=> |value| <= tolerance * scale
struct Check {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  double tolerance = 0.0;
  double scale = 1.0;
  bool residual = false;
  bool pass = false;
  std::optional<double> standard_error;
  std::string provenance;  // paper anchor or "plumbing"

  static Check one_sided(std::string name, double value, double bound,
                         double tolerance, std::string provenance);
  static Check residual_check(std::string name, double value, double tolerance,
                              double scale, std::string provenance);
};

struct VerificationReport {
  std::string title;
  std::vector<Check> checks;

  void add(Check c) { checks.push_back(std::move(c)); }
  bool all_pass() const;
  std::string to_json() const;
  // One line per check, suitable for terminal output.
  std::string summary() const;
};

}  // namespace mclab

#endif
