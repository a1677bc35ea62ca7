#ifndef MCLAB_PARTICLE_MODERATED_HPP
#define MCLAB_PARTICLE_MODERATED_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "mclab/coefficients.hpp"
#include "mclab/estimators.hpp"
#include "mclab/grid.hpp"
#include "mclab/report.hpp"
#include "mclab/rng.hpp"

namespace mclab {

// Draws one initial position coordinate for the given particle; coordinate c
// indexes the dimension.
using InitialSampler =
    std::function<double(const Rng&, uint64_t particle, int coordinate)>;

InitialSampler gaussian_sampler(double mean, double std_dev);
InitialSampler uniform_sampler(double a, double b);

struct ModeratedOptions {
  int snapshot_stride = 5;
  bool lag_kde = false;  // reuse the previous step's density (documented bias)
  double kde_half_width = 8.0;
  int kde_cells = 1024;
  int dimension = 1;  // 1 or 2
};

struct ModeratedResult {
  // Positions at snapshot times, flat d entries per particle.
  std::vector<std::vector<double>> position_snapshots;
  std::vector<double> snapshot_times;
  std::vector<int> snapshot_steps;
  PathField kde_path;  // d=1 only; empty for d=2
  long clamp_count = 0;
  long particle_steps = 0;
  GridSpec kde_grid_spec;
};

// Euler-Maruyama for dX = sigma(u_hat(X)) dW with u_hat the mollified
// empirical density, refreshed every step (unless lagged).
ModeratedResult simulate_moderated(const DiffusionModel& model,
                                   const InitialSampler& u0_sampler, int n_particles,
                                   const MollifierSpec& spec, double dt, double t_final,
                                   uint64_t seed, const ModeratedOptions& opts);

// Twice-differentiable test function with analytic second derivative.
struct TestFunction {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> f_second;
};

TestFunction linear_test_fn();
TestFunction bump_test_fn(double center, double width);

// Empirical covariances between candidate-martingale increments and bounded
// past functionals, with Monte Carlo standard errors; pass at 3 SE.
VerificationReport martingale_residual(
    const ModeratedResult& traj, const DiffusionModel& model,
    const std::vector<TestFunction>& test_fns,
    const std::vector<std::pair<int, int>>& windows);

}  // namespace mclab

#endif
