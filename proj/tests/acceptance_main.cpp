#include <cstdlib>
#include <iostream>
#include "mclab/acceptance.hpp"
int main() {
  mclab::AcceptanceOptions opts;
  if (std::getenv("MCLAB_ACCEPTANCE_QUICK")) opts.quick = true;
  auto results = mclab::run_acceptance(opts);
  std::cout << mclab::acceptance_summary(results);
  bool all = true;
  for (const auto& r : results) {
    if (!r.pass)
      for (const auto& rep : r.reports) std::cout << rep.summary();
    all = all && r.pass;
  }
  return all ? 0 : 1;
}
