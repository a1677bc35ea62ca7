#include <cmath>
#include <vector>

#include "doctest.h"
#include "mclab/conditional.hpp"

using namespace mclab;

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

}  // namespace

TEST_CASE("make_coefficients: catalog bounds and Lipschitz constants") {
  auto c1 = make_coefficients("zero", "const:1", "halfsin", "identity");
  CHECK(c1.b_zero);
  CHECK(c1.sup_ell == doctest::Approx(0.5));
  CHECK(c1.lip_ell == doctest::Approx(0.5));
  CHECK(c1.lip_gamma == doctest::Approx(1.0));
  CHECK(c1.ell(M_PI / 2.0) == doctest::Approx(0.5));
  CHECK(c1.gamma(0.7) == doctest::Approx(0.7));

  auto c2 = make_coefficients("tanh", "const:1", "tanh", "tanh_affine");
  CHECK(!c2.b_zero);
  CHECK(c2.b_autonomous);
  CHECK(c2.b(0.5, 99.0) == doctest::Approx(std::tanh(0.5)));
  CHECK(c2.sup_sigma_inv_b == doctest::Approx(1.0));
  CHECK(c2.sup_gamma == doctest::Approx(1.5));
  CHECK(c2.ellipticity_gamma > 0.0);

  auto c3 = make_coefficients("tanh_y", "const:2", "const:1", "const:1");
  CHECK(!c3.b_autonomous);
  CHECK(c3.b(0.0, -0.3) == doctest::Approx(std::tanh(-0.3)));
  CHECK(c3.sup_sigma_inv_b == doctest::Approx(0.5));
  CHECK(c3.lip_ell == doctest::Approx(0.0));

  CHECK_THROWS(make_coefficients("nonsense", "const:1", "tanh", "const:1"));
}

TEST_CASE("spot_check_ellipticity passes for the elliptic presets") {
  auto coeffs = make_coefficients("tanh", "const:1", "tanh", "tanh_affine");
  auto rep = spot_check_ellipticity(coeffs, 101);
  CHECK(rep.all_pass());
  for (const auto& c : rep.checks) CHECK(!c.provenance.empty());
}

TEST_CASE("simulate_conditional: constant coefficients drift the Y mean") {
  // ell = 2 constant: mean(Y_T) = mean(Y_0) + 2T within 3 SE.
  auto coeffs = make_coefficients("zero", "const:1", "const:2", "const:1");
  auto mu0 = independent_gaussian_pair(0.0, 1.0, 0.5, 1.0);
  int n = 20000;
  double T = 0.25;
  EstimatorConfig est;
  ConditionalOptions opts;
  opts.snapshot_stride = 1 << 20;
  auto run = simulate_conditional(coeffs, mu0, n, est, 1e-3, T, 404, opts);
  REQUIRE(!run.y_snaps.empty());
  double m = mean_of(run.y_snaps.back());
  // Var(Y_T) = 1 + T, SE of the mean = sqrt((1+T)/n).
  double se = std::sqrt((1.0 + T) / n);
  CHECK(std::abs(m - (0.5 + 2.0 * T)) <= 3.0 * se);
  CHECK(run.bound_violations == 0);
}

TEST_CASE("simulate_conditional: initial drift estimate is E[ell(Y0)]") {
  // With X0 independent of Y0 the time-zero conditional is flat; check that
  // the Y increment over the first step matches E[ell(Y0)] dt on average.
  auto coeffs = make_coefficients("zero", "const:1", "tanh", "const:1");
  auto mu0 = independent_gaussian_pair(0.0, 1.0, 1.0, 0.5);
  int n = 20000;
  EstimatorConfig est;
  ConditionalOptions opts;
  opts.snapshot_stride = 1;
  double dt = 1e-3;
  auto run = simulate_conditional(coeffs, mu0, n, est, dt, 2.0 * dt, 505, opts);
  REQUIRE(run.y_snaps.size() >= 2);
  double drift = (mean_of(run.y_snaps[1]) - mean_of(run.y_snaps[0])) / dt;
  // E[tanh(Y0)] for Y0 ~ N(1, 0.25), by quadrature.
  double ref = 0.0, dz = 1e-3;
  for (double z = -5.0; z <= 5.0; z += dz)
    ref += std::tanh(1.0 + 0.5 * z) * std::exp(-0.5 * z * z) /
           std::sqrt(2.0 * M_PI) * dz;
  // Diffusion noise of the one-step mean: gamma = 1, SE = 1/sqrt(n dt).
  double se = 1.0 / std::sqrt(double(n) * dt);
  CHECK(std::abs(drift - ref) <= 3.0 * se);
}

TEST_CASE("simulate_conditional: self-consistency against a 4N run") {
  auto coeffs = make_coefficients("zero", "const:1", "tanh", "const:1");
  auto mu0 = independent_gaussian_pair(0.0, 1.0, 0.0, 1.0);
  EstimatorConfig est;
  ConditionalOptions opts;
  opts.snapshot_stride = 1 << 20;
  double T = 0.2;
  auto small = simulate_conditional(coeffs, mu0, 5000, est, 2e-3, T, 606, opts);
  auto big = simulate_conditional(coeffs, mu0, 20000, est, 2e-3, T, 607, opts);
  double mS = mean_of(small.y_snaps.back()), mB = mean_of(big.y_snaps.back());
  double se = std::sqrt((1.0 + T) / 5000.0) + std::sqrt((1.0 + T) / 20000.0);
  CHECK(std::abs(mS - mB) <= 3.0 * se);
}

TEST_CASE("girsanov: zero drift keeps Z identically one") {
  auto coeffs = make_coefficients("zero", "const:1", "tanh", "const:1");
  auto mu0 = independent_gaussian_pair(0.0, 1.0, 0.0, 1.0);
  EstimatorConfig est;
  ConditionalOptions opts;
  opts.snapshot_stride = 25;
  auto run = simulate_girsanov_q(coeffs, mu0, 2000, est, 2e-3, 0.1, 808, opts);
  CHECK(run.is_q_run);
  for (const auto& snap : run.z_snaps)
    for (double z : snap) CHECK(z == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("girsanov: inverse weights are a Q-martingale with mean one") {
  auto coeffs = make_coefficients("tanh", "const:1", "tanh", "tanh_affine");
  auto mu0 = independent_gaussian_pair(0.0, 1.0, 0.0, 1.0);
  EstimatorConfig est;
  ConditionalOptions opts;
  opts.snapshot_stride = 50;
  int n = 50000;
  double T = 0.2;
  auto run = simulate_girsanov_q(coeffs, mu0, n, est, 1e-3, T, 909, opts);
  const auto& zT = run.z_snaps.back();
  double s = 0.0, ss = 0.0;
  for (double z : zT) {
    double zi = 1.0 / z;
    s += zi;
    ss += zi * zi;
  }
  double m = s / n;
  double se = std::sqrt((ss / n - m * m) / n);
  CHECK(std::abs(m - 1.0) <= 3.0 * se);
}

TEST_CASE("girsanov_weights replays the stored Z paths exactly") {
  auto coeffs = make_coefficients("tanh", "const:1", "tanh", "tanh_affine");
  auto mu0 = independent_gaussian_pair(0.0, 1.0, 0.0, 1.0);
  EstimatorConfig est;
  ConditionalOptions opts;
  opts.snapshot_stride = 10;
  opts.store_full_paths = true;
  auto run = simulate_girsanov_q(coeffs, mu0, 500, est, 2e-3, 0.05, 111, opts);
  auto zpaths = girsanov_weights(run, coeffs);
  REQUIRE(!zpaths.empty());
  for (size_t k = 0; k < run.z_snaps.size(); ++k) {
    size_t step = size_t(run.snap_times[k] / run.dt + 0.5);
    REQUIRE(step < zpaths.size());
    for (size_t i = 0; i < run.z_snaps[k].size(); ++i)
      CHECK(zpaths[step][i] ==
            doctest::Approx(run.z_snaps[k][i]).epsilon(1e-10));
  }
}

TEST_CASE("weighted_conditional_check: zero drift case agrees trivially") {
  auto coeffs = make_coefficients("zero", "const:1", "tanh", "tanh_affine");
  auto mu0 = independent_gaussian_pair(0.0, 1.0, 0.0, 1.0);
  EstimatorConfig est;
  ConditionalOptions opts;
  opts.snapshot_stride = 1 << 20;
  double T = 0.1;
  auto p_run = simulate_conditional(coeffs, mu0, 10000, est, 1e-3, T, 21, opts);
  auto q_run = simulate_girsanov_q(coeffs, mu0, 10000, est, 1e-3, T, 22, opts);
  auto theta = [](double, double y) { return std::tanh(y); };
  auto rep = weighted_conditional_check(p_run, q_run, theta, est, 23);
  CHECK(rep.all_pass());
}

TEST_CASE("weighted_conditional_check: constant theta matches exactly") {
  auto coeffs = make_coefficients("tanh", "const:1", "tanh", "tanh_affine");
  auto mu0 = independent_gaussian_pair(0.0, 1.0, 0.0, 1.0);
  EstimatorConfig est;
  ConditionalOptions opts;
  opts.snapshot_stride = 1 << 20;
  double T = 0.1;
  auto p_run = simulate_conditional(coeffs, mu0, 5000, est, 1e-3, T, 31, opts);
  auto q_run = simulate_girsanov_q(coeffs, mu0, 5000, est, 1e-3, T, 32, opts);
  auto one = [](double, double) { return 1.0; };
  auto rep = weighted_conditional_check(p_run, q_run, one, est, 33);
  REQUIRE(!rep.checks.empty());
  CHECK(rep.all_pass());
  // Both estimators reduce to 1 at every adequate query, so the worst
  // discrepancy is rounding-level.
  CHECK(std::abs(rep.checks.front().value) <= 1e-10);
}

TEST_CASE("exp_mart_bound_check: zero drift statistic is one") {
  auto coeffs = make_coefficients("zero", "const:1", "tanh", "const:1");
  auto mu0 = independent_gaussian_pair(0.0, 1.0, 0.0, 1.0);
  EstimatorConfig est;
  ConditionalOptions opts;
  opts.snapshot_stride = 25;
  auto run = simulate_girsanov_q(coeffs, mu0, 2000, est, 2e-3, 0.1, 41, opts);
  auto rep = exp_mart_bound_check(run, coeffs, 42);
  CHECK(rep.all_pass());
  for (const auto& c : rep.checks)
    if (c.name.find("cond_second_moment") != std::string::npos)
      CHECK(c.value == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("exp_mart_bound_check: records both candidate exponents") {
  auto coeffs = make_coefficients("tanh", "const:1", "tanh", "tanh_affine");
  auto mu0 = independent_gaussian_pair(0.0, 1.0, 0.0, 1.0);
  EstimatorConfig est;
  ConditionalOptions opts;
  opts.snapshot_stride = 25;
  auto run = simulate_girsanov_q(coeffs, mu0, 2000, est, 2e-3, 0.05, 51, opts);
  auto rep = exp_mart_bound_check(run, coeffs, 52);
  bool saw_sq = false, saw_alt = false;
  for (const auto& c : rep.checks) {
    if (c.name.find("vs_sq_exponent") != std::string::npos) {
      saw_sq = true;
      CHECK(c.bound ==
            doctest::Approx(std::exp(3.0 * 0.05 * 1.0)).epsilon(1e-9));
    }
    if (c.name.find("alt_exponent") != std::string::npos) saw_alt = true;
  }
  CHECK(saw_sq);
  CHECK(saw_alt);
}

TEST_CASE("picard_iterate: constant coefficients converge in one step") {
  auto coeffs = make_coefficients("zero", "const:1", "const:1", "const:1");
  auto mu0 = independent_gaussian_pair(0.0, 1.0, 0.0, 1.0);
  PathNormSpec norm;
  norm.c = 1.0;
  norm.dt = 2e-3;
  norm.t_final = 0.25;
  auto res = picard_iterate(coeffs, mu0, 2000, norm, 4, 61);
  REQUIRE(res.distances.size() >= 2);
  CHECK(res.distances[0] > 0.0);
  // The map is constant, so the second distance is estimator-noise level.
  CHECK(res.distances[1] <= 1e-10);
}

TEST_CASE("picard_iterate: K = 1 yields one distance and no claim") {
  auto coeffs = make_coefficients("zero", "const:1", "halfsin", "const:1");
  auto mu0 = independent_gaussian_pair(0.0, 1.0, 0.0, 1.0);
  PathNormSpec norm;
  norm.c = 2.0;
  norm.dt = 2e-3;
  norm.t_final = 0.1;
  auto res = picard_iterate(coeffs, mu0, 1000, norm, 1, 62);
  CHECK(res.distances.size() == 1);
  CHECK(!res.no_contraction);
}

TEST_CASE("picard_iterate: halfsin benchmark contracts geometrically") {
  auto coeffs = make_coefficients("zero", "const:1", "halfsin", "identity");
  auto mu0 = independent_gaussian_pair(0.0, 1.0, 0.0, 1.0);
  PathNormSpec norm;
  norm.c = 4.0 * (coeffs.lip_ell * coeffs.lip_ell +
                  coeffs.lip_gamma * coeffs.lip_gamma);
  norm.dt = 1e-3;
  norm.t_final = 0.25;
  auto res = picard_iterate(coeffs, mu0, 4000, norm, 6, 63);
  CHECK(!res.no_contraction);
  CHECK(res.geometric_ratio < 1.0);
  CHECK(res.distances[1] < res.distances[0]);
}

TEST_CASE("pathwise_uniqueness_check: refinement shrinks the estimator gap") {
  auto coeffs = make_coefficients("zero", "const:1", "tanh", "tanh_affine");
  auto mu0 = independent_gaussian_pair(0.0, 1.0, 0.0, 1.0);
  auto rep = pathwise_uniqueness_check(coeffs, mu0, 2000, 2e-3, 0.1, 71, 1.0);
  CHECK(rep.all_pass());
}
