#ifndef MCLAB_FP_SOLVER_HPP
#define MCLAB_FP_SOLVER_HPP

#include "mclab/coefficients.hpp"
#include "mclab/grid.hpp"
#include "mclab/report.hpp"

namespace mclab {

struct SolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One backward-Euler step of du/dt = 1/2 d/dx(alpha_eps(v) du/dx) with the
// coefficient frozen at frozen_v. Face coefficients are arithmetic means of
// the adjacent cell values; zero-flux boundaries.
DensityField step_linear(const DensityField& u, const DensityField& frozen_v,
                         const DiffusionModel& model, double eps, double dt);

// Semi-implicit time march of du/dt = 1/2 Lap((sigma^2_eps(u)) u): freeze the
// coefficient at the previous inner iterate and re-solve until the inner sweep
// is stationary. Returns the full trajectory (n_steps + 1 snapshots).
PathField solve_nonlinear_fp(const DiffusionModel& model, const DensityField& u0,
                             double eps, const GridSpec& grid,
                             double picard_inner_tol = 1e-10,
                             int max_inner = 50);

// Whole-trajectory fixed point: iterate v -> A(v) where A(v) marches the
// linear PDE with coefficient alpha_eps(v(t,x)) frozen over all of [0,T].
struct SchaeferResult {
  PathField trajectory;
  int iterations = 0;
};
SchaeferResult schaefer_fixed_point(const DiffusionModel& model,
                                    const DensityField& u0, double eps,
                                    const GridSpec& grid, double outer_tol,
                                    int max_outer = 200);

// Certifies the maximum principle, the energy inequality, and the dissipation
// identity on a computed trajectory.
VerificationReport energy_report(const PathField& traj,
                                 const DiffusionModel& model, double eps);

}  // namespace mclab

#endif
