#include <cmath>
#include <cstdio>
#include <vector>

#include "doctest.h"
#include "mclab/config.hpp"
#include "mclab/convergence.hpp"
#include "mclab/metrics.hpp"
#include "mclab/report.hpp"
#include "mclab/rng.hpp"

using namespace mclab;

TEST_CASE("rng: identical inputs give identical draws") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.uniform(i, 7, RngChannel::brownian_b, 2) ==
          b.uniform(i, 7, RngChannel::brownian_b, 2));
    CHECK(a.normal(3, i, RngChannel::init_x, 0) ==
          b.normal(3, i, RngChannel::init_x, 0));
  }
  // Different seed changes the stream.
  Rng c(124);
  CHECK(a.uniform(0, 0, RngChannel::init_x, 0) !=
        c.uniform(0, 0, RngChannel::init_x, 0));
}

TEST_CASE("rng: normal moments over 1e6 draws") {
  Rng rng(20240801);
  const int n = 1000000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = rng.normal(i, 0, RngChannel::scratch, 0);
    sum += z;
    sumsq += z * z;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  // SE(mean) = 1/sqrt(n); SE(var) = sqrt(2/n) for a standard normal.
  CHECK(std::abs(mean) < 3.0 / std::sqrt(double(n)));
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("rng: channel B vs channel W uncorrelated") {
  Rng rng(99);
  const int n = 1000000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double zb = rng.normal(i, 5, RngChannel::brownian_b, 0);
    double zw = rng.normal(i, 5, RngChannel::brownian_w, 0);
    sum += zb * zw;
  }
  // Correlation of independent standard normals has SE 1/sqrt(n).
  CHECK(std::abs(sum / n) < 3.0 / std::sqrt(double(n)));
}

TEST_CASE("rng: uniform draws stay in the open interval") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    double u = rng.uniform(i, 1, RngChannel::scratch, 3);
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("report: one-sided pass rule evaluated exactly as stored") {
  Check c = Check::one_sided("x", 1.0, 1.0, 0.0, "plumbing");
  CHECK(c.pass);
  Check d = Check::one_sided("x", 1.0 + 1e-12, 1.0, 0.0, "plumbing");
  CHECK(!d.pass);
  Check e = Check::one_sided("x", 1.09, 1.0, 0.1, "plumbing");
  CHECK(e.pass);
}

TEST_CASE("report: residual pass rule") {
  CHECK(Check::residual_check("r", 0.05, 0.1, 1.0, "plumbing").pass);
  CHECK(Check::residual_check("r", -0.05, 0.1, 1.0, "plumbing").pass);
  CHECK(!Check::residual_check("r", 0.2, 0.1, 1.0, "plumbing").pass);
  CHECK(Check::residual_check("r", 0.2, 0.1, 10.0, "plumbing").pass);
}

TEST_CASE("report: all_pass and serialization carry provenance") {
  VerificationReport rep;
  rep.title = "t";
  rep.add(Check::one_sided("a", 0.5, 1.0, 0.0, "plumbing"));
  CHECK(rep.all_pass());
  rep.add(Check::one_sided("b", 2.0, 1.0, 0.0, "plumbing"));
  CHECK(!rep.all_pass());
  std::string js = rep.to_json();
  CHECK(js.find("plumbing") != std::string::npos);
  CHECK(js.find("\"a\"") != std::string::npos);
  for (const auto& c : rep.checks) CHECK(!c.provenance.empty());
}

TEST_CASE("config: round-trips bit-identically") {
  std::string text =
      "[grid]\nL = 8\nn_cells = 512\n\n[model]\nname = sqrt_affine(1,1)\n";
  Config cfg = Config::parse(text);
  std::string once = cfg.serialize();
  Config cfg2 = Config::parse(once);
  CHECK(cfg2.serialize() == once);
  CHECK(cfg.get("grid", "L") == "8");
  CHECK(cfg.get_double("grid", "n_cells") == 512.0);
  CHECK(cfg.get_double_or("grid", "missing", 2.5) == 2.5);
  CHECK(cfg.get_int_or("grid", "n_cells", 0) == 512);
  CHECK(cfg.get_or("model", "name", "x") == "sqrt_affine(1,1)");
  CHECK(cfg.has("model", "name"));
  CHECK(!cfg.has("model", "absent"));
}

TEST_CASE("metrics: W1 of identical samples is zero") {
  std::vector<double> a{0.3, -1.2, 4.0};
  CHECK(wasserstein1_1d(a, a) == doctest::Approx(0.0));
}

TEST_CASE("metrics: W1 of point masses is the translation distance") {
  CHECK(wasserstein1_1d({0.0}, {2.5}) == doctest::Approx(2.5));
  // Translation of a whole sample.
  std::vector<double> a{-1.0, 0.0, 1.0}, b{-0.3, 0.7, 1.7};
  CHECK(wasserstein1_1d(a, b) == doctest::Approx(0.7));
}

TEST_CASE("metrics: W1 of shifted Gaussian densities equals the shift") {
  int n = 4096;
  double L = 10.0, h = 2.0 * L / n, m = 0.37;
  std::vector<double> pa(n), pb(n);
  for (int i = 0; i < n; ++i) {
    double x = -L + (i + 0.5) * h;
    pa[i] = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    pb[i] = std::exp(-0.5 * (x - m) * (x - m)) / std::sqrt(2.0 * M_PI);
  }
  CHECK(wasserstein1_1d_densities(pa, pb, h) == doctest::Approx(m).epsilon(1e-6));
}

TEST_CASE("metrics: samples-vs-density W1 agrees with density-density W1") {
  int n = 512;
  double L = 6.0, h = 2.0 * L / n;
  std::vector<double> dens(n);
  for (int i = 0; i < n; ++i) {
    double x = -L + (i + 0.5) * h;
    dens[i] = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  }
  // A large equal-weight sample drawn from the same density.
  Rng rng(5);
  std::vector<double> samples(200000);
  for (size_t i = 0; i < samples.size(); ++i)
    samples[i] = rng.normal(i, 0, RngChannel::init_x, 0);
  double w = wasserstein1_1d_samples_density(samples, {}, dens, -L, h);
  CHECK(w < 0.01);
}

TEST_CASE("metrics: norms and loglog slope") {
  std::vector<double> v{1.0, -2.0, 2.0};
  CHECK(l1_norm(v, 0.5) == doctest::Approx(2.5));
  CHECK(l2_norm(v, 0.5) == doctest::Approx(std::sqrt(0.5 * 9.0)));
  CHECK(linf_norm(v) == doctest::Approx(2.0));
  std::vector<double> xs{1.0, 2.0, 4.0, 8.0};
  std::vector<double> ys;
  for (double x : xs) ys.push_back(3.0 * x * x);
  CHECK(loglog_slope(xs, ys) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("convergence: heat h-study slope at least 0.9") {
  Config cfg;
  StudyResult res = run_convergence_study(
      "fp_heat_h", cfg, {1.0 / 64, 1.0 / 128, 1.0 / 256}, {});
  REQUIRE(res.levels.size() == 3);
  REQUIRE(res.slope.has_value());
  CHECK(*res.slope >= 0.9);
  CHECK(res.monotone_nonincreasing);
  // CSV has a header plus one row per (level, seed).
  std::string csv = res.to_csv();
  CHECK(csv.find("study,axis,metric") != std::string::npos);
}

TEST_CASE("convergence: single level yields one row and no slope") {
  Config cfg;
  StudyResult res = run_convergence_study("fp_heat_h", cfg, {1.0 / 64}, {});
  CHECK(res.rows.size() == 1);
  CHECK(!res.slope.has_value());
}

TEST_CASE("convergence: eps-stability gaps are nonincreasing") {
  Config cfg;
  StudyResult res = run_convergence_study(
      "eps_stability", cfg, {0.1, 0.05, 0.025, 0.0125}, {});
  REQUIRE(res.medians.size() == 4);
  for (size_t i = 1; i < res.medians.size(); ++i)
    CHECK(res.medians[i] <= res.medians[i - 1] * (1.0 + 1e-12));
  CHECK(res.monotone_nonincreasing);
}

TEST_CASE("convergence: stochastic axis demands three seeds") {
  Config cfg;
  CHECK_THROWS(run_convergence_study("moderated_n", cfg, {500.0}, {1}));
}

TEST_CASE("convergence: child errors carry level and seed context") {
  Config cfg;
  try {
    run_convergence_study("fp_heat_h", cfg, {-1.0}, {});
    CHECK(false);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    CHECK(msg.find("level") != std::string::npos);
  }
}

TEST_CASE("convergence: unknown study is rejected") {
  Config cfg;
  CHECK_THROWS(run_convergence_study("no_such_study", cfg, {1.0}, {}));
}
