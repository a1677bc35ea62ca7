#include <cmath>
#include <vector>

#include "doctest.h"
#include "mclab/fp_solver.hpp"
#include "mclab/metrics.hpp"
#include "mclab/particle_moderated.hpp"

using namespace mclab;

namespace {

MollifierSpec default_spec(double bw) {
  MollifierSpec spec;
  spec.bandwidth = bw;
  return spec;
}

double var_of(const std::vector<double>& xs) {
  double s = 0.0, ss = 0.0;
  for (double x : xs) {
    s += x;
    ss += x * x;
  }
  double n = double(xs.size());
  double m = s / n;
  return ss / n - m * m;
}

}  // namespace

TEST_CASE("moderated: constant sigma gives independent Brownian motions") {
  // var(X_T) = var(X_0) + s0^2 T within 3 standard errors.
  double s0 = 1.3, T = 0.25;
  int n = 20000;
  auto model = make_constant_model(s0, 1.0);
  ModeratedOptions opts;
  opts.snapshot_stride = 1 << 20;  // final snapshot only
  auto res = simulate_moderated(model, gaussian_sampler(0.0, 1.0), n,
                                default_spec(0.2), 1e-3, T, 77, opts);
  REQUIRE(!res.position_snapshots.empty());
  const auto& final_pos = res.position_snapshots.back();
  double v = var_of(final_pos);
  double expect = 1.0 + s0 * s0 * T;
  // SE of the sample variance of a normal is var * sqrt(2/n).
  CHECK(std::abs(v - expect) <= 3.0 * expect * std::sqrt(2.0 / n));
}

TEST_CASE("moderated: identical seed reproduces trajectories bit-exactly") {
  auto model = make_sqrt_affine_model(1.0, 1.0, 1.0);
  ModeratedOptions opts;
  opts.snapshot_stride = 10;
  auto a = simulate_moderated(model, gaussian_sampler(0.0, 0.5), 500,
                              default_spec(0.3), 2e-3, 0.05, 42, opts);
  auto b = simulate_moderated(model, gaussian_sampler(0.0, 0.5), 500,
                              default_spec(0.3), 2e-3, 0.05, 42, opts);
  REQUIRE(a.position_snapshots.size() == b.position_snapshots.size());
  for (size_t k = 0; k < a.position_snapshots.size(); ++k)
    CHECK(a.position_snapshots[k] == b.position_snapshots[k]);
}

TEST_CASE("moderated: kde path snapshots are probability densities") {
  auto model = make_sqrt_affine_model(1.0, 1.0, 1.0);
  ModeratedOptions opts;
  opts.snapshot_stride = 5;
  auto res = simulate_moderated(model, gaussian_sampler(0.0, 0.5), 2000,
                                default_spec(0.25), 2e-3, 0.05, 7, opts);
  REQUIRE(!res.kde_path.snapshots.empty());
  for (const auto& snap : res.kde_path.snapshots) {
    CHECK(std::abs(snap.mass() - 1.0) <= 1e-6);
    for (double v : snap.values) CHECK(v >= 0.0);
  }
  CHECK(res.particle_steps == 2000L * 25L);
  // Clamping should be rare in a converged configuration.
  CHECK(double(res.clamp_count) / double(res.particle_steps) <= 1e-3);
}

TEST_CASE("moderated: marginal tracks the FP density") {
  double T = 0.2;
  auto model = make_sqrt_affine_model(1.0, 1.0, 1.0);
  GridSpec g;
  g.half_width = 8.0;
  g.n_cells = 512;
  g.dt = 1e-3;
  g.n_steps = int(T / g.dt + 0.5);
  auto u0 = project_initial(gaussian_density(0.0, 0.25), g);
  auto fp = solve_nonlinear_fp(model, u0, 0.0, g);
  ModeratedOptions opts;
  opts.snapshot_stride = 1 << 20;
  int n = 20000;
  double bw = 0.6 * std::pow(double(n), -0.2);
  auto res = simulate_moderated(model, gaussian_sampler(0.0, 0.5), n,
                                default_spec(bw), 1e-3, T, 20240801, opts);
  double w1 = wasserstein1_1d_samples_density(
      res.position_snapshots.back(), {}, fp.snapshots.back().values,
      -g.half_width, g.h());
  CHECK(w1 <= 0.05);
}

TEST_CASE("moderated: two dimensions run and conserve particle count") {
  auto model = make_sqrt_affine_model(1.0, 1.0, 1.0);
  ModeratedOptions opts;
  opts.dimension = 2;
  opts.snapshot_stride = 10;
  MollifierSpec spec;
  spec.bandwidth = 0.4;
  spec.dimension = 2;
  int n = 500;
  auto res = simulate_moderated(model, gaussian_sampler(0.0, 0.5), n, spec,
                                2e-3, 0.02, 5, opts);
  REQUIRE(!res.position_snapshots.empty());
  for (const auto& snap : res.position_snapshots) {
    CHECK(int(snap.size()) == 2 * n);
    for (double x : snap) CHECK(std::isfinite(x));
  }
  // d = 2 produces no kde PathField.
  CHECK(res.kde_path.snapshots.empty());
}

TEST_CASE("moderated: lagged kde stays close to the refreshed scheme") {
  auto model = make_sqrt_affine_model(1.0, 1.0, 1.0);
  ModeratedOptions fresh, lag;
  fresh.snapshot_stride = lag.snapshot_stride = 1 << 20;
  lag.lag_kde = true;
  int n = 5000;
  auto a = simulate_moderated(model, gaussian_sampler(0.0, 0.5), n,
                              default_spec(0.2), 1e-3, 0.1, 31, fresh);
  auto b = simulate_moderated(model, gaussian_sampler(0.0, 0.5), n,
                              default_spec(0.2), 1e-3, 0.1, 31, lag);
  double w1 = wasserstein1_1d(a.position_snapshots.back(),
                              b.position_snapshots.back());
  CHECK(w1 <= 0.02);  // documented O(dt) bias of the lagged variant
}

TEST_CASE("martingale_residual: Brownian case with linear test function") {
  auto model = make_constant_model(1.0, 1.0);
  ModeratedOptions opts;
  opts.snapshot_stride = 10;
  auto res = simulate_moderated(model, gaussian_sampler(0.0, 0.5), 20000,
                                default_spec(0.2), 1e-3, 0.2, 13, opts);
  int last = int(res.snapshot_steps.size()) - 1;
  auto rep = martingale_residual(res, model, {linear_test_fn()},
                                 {{0, last / 2}, {last / 2, last}});
  CHECK(rep.all_pass());
  for (const auto& c : rep.checks) {
    CHECK(c.standard_error.has_value());
    CHECK(!c.provenance.empty());
  }
}

TEST_CASE("martingale_residual: bump test function under nonlinear sigma") {
  auto model = make_sqrt_affine_model(1.0, 1.0, 1.0);
  ModeratedOptions opts;
  opts.snapshot_stride = 10;
  auto res = simulate_moderated(model, gaussian_sampler(0.0, 0.5), 20000,
                                default_spec(0.2), 1e-3, 0.2, 17, opts);
  int last = int(res.snapshot_steps.size()) - 1;
  auto rep = martingale_residual(res, model,
                                 {linear_test_fn(), bump_test_fn(0.0, 3.0)},
                                 {{0, last}});
  CHECK(rep.all_pass());
}

TEST_CASE("test functions expose analytic second derivatives") {
  auto bump = bump_test_fn(0.5, 2.0);
  double h = 1e-5;
  for (double x : {-0.7, 0.1, 0.9, 1.4}) {
    double fd = (bump.f(x + h) - 2.0 * bump.f(x) + bump.f(x - h)) / (h * h);
    CHECK(bump.f_second(x) == doctest::Approx(fd).epsilon(1e-4));
  }
  auto lin = linear_test_fn();
  CHECK(lin.f(2.0) == doctest::Approx(2.0));
  CHECK(lin.f_second(2.0) == doctest::Approx(0.0));
}
