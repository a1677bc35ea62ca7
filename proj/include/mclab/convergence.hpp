#ifndef MCLAB_CONVERGENCE_HPP
#define MCLAB_CONVERGENCE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mclab/config.hpp"

namespace mclab {

struct StudyRow {
  double level = 0.0;
  uint64_t seed = 0;
  double metric = 0.0;
};

struct StudyResult {
  std::string study;
  std::string axis;         // one of N, dt, h, eps, bandwidth
  std::string metric_name;
  std::vector<StudyRow> rows;        // one per (level, seed)
  std::vector<double> levels;
  std::vector<double> medians;       // per level, median over seeds
  std::optional<double> slope;       // log-log fit of median vs level
  bool monotone_nonincreasing = false;

  std::string to_csv() const;
  std::string to_json() const;
};

// Registered studies:
//   fp_heat_h       axis h          L1 error vs analytic Gaussian (dt = h/2)
//   fp_heat_dt      axis dt         L1 error vs analytic Gaussian (fixed grid)
//   eps_stability   axis eps        ||u^eps(T) - u^{eps/2}(T)||_{L2}
//   moderated_n     axis N          W1(empirical marginal, FP density) at T
//   kde_bandwidth   axis bandwidth  L1 error of the KDE vs sampled density
// Stochastic axes (N, bandwidth) require >= 3 seeds; deterministic studies
// run once per level. Slope is fitted only when >= 2 levels are present.
StudyResult run_convergence_study(const std::string& study, const Config& cfg,
                                  const std::vector<double>& levels,
                                  const std::vector<uint64_t>& seeds);

}  // namespace mclab

#endif
