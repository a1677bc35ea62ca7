#include "mclab/report.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"

namespace mclab {

Check Check::one_sided(std::string name, double value, double bound,
                       double tolerance, std::string provenance) {
  Check c;
  c.name = std::move(name);
  c.value = value;
  c.bound = bound;
  c.tolerance = tolerance;
  c.residual = false;
  c.pass = value <= bound * (1.0 + tolerance);
  c.provenance = std::move(provenance);
  return c;
}

Check Check::residual_check(std::string name, double value, double tolerance,
                            double scale, std::string provenance) {
  Check c;
  c.name = std::move(name);
  c.value = value;
  c.tolerance = tolerance;
  c.scale = scale;
  c.residual = true;
  c.pass = std::abs(value) <= tolerance * scale;
  c.provenance = std::move(provenance);
  return c;
}

bool VerificationReport::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

std::string VerificationReport::to_json() const {
  nlohmann::ordered_json j;
  j["title"] = title;
  j["all_pass"] = all_pass();
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    nlohmann::ordered_json jc;
    jc["name"] = c.name;
    jc["value"] = c.value;
    if (c.residual) {
      jc["kind"] = "residual";
      jc["scale"] = c.scale;
    } else {
      jc["kind"] = "one_sided";
      jc["bound"] = c.bound;
    }
    jc["tolerance"] = c.tolerance;
    jc["pass"] = c.pass;
    if (c.standard_error) jc["standard_error"] = *c.standard_error;
    jc["provenance"] = c.provenance;
    j["checks"].push_back(jc);
  }
  return j.dump(2);
}

std::string VerificationReport::summary() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    os << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << ": value=" << c.value;
    if (c.residual)
      os << " |value| <= " << c.tolerance * c.scale;
    else
      os << " bound=" << c.bound * (1.0 + c.tolerance);
    if (c.standard_error) os << " se=" << *c.standard_error;
    os << "\n";
  }
  return os.str();
}

}  // namespace mclab
