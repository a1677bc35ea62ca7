#include <cmath>
#include <vector>

#include "doctest.h"
#include "mclab/estimators.hpp"
#include "mclab/rng.hpp"

using namespace mclab;

TEST_CASE("mollifier: kernels integrate to one") {
  for (auto shape : {MollifierShape::gaussian, MollifierShape::epanechnikov}) {
    MollifierSpec spec;
    spec.shape = shape;
    spec.bandwidth = 0.3;
    double sum = 0.0, dz = 1e-3;
    for (double z = -6.0; z <= 6.0; z += dz) sum += spec.kernel1d(z) * dz;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-3));
    // Scaling: value() applies the bandwidth-scaled kernel.
    double dx[1] = {0.15};
    CHECK(spec.value(dx) ==
          doctest::Approx(spec.kernel1d(0.15 / 0.3) / 0.3).epsilon(1e-12));
  }
}

TEST_CASE("kde: single point with unit bandwidth is the standard normal") {
  std::vector<double> pts{0.0};
  MollifierSpec spec;
  spec.bandwidth = 1.0;
  for (double x : {0.0, 0.5, -1.3, 2.0}) {
    std::vector<double> q{x};
    auto out = kde(pts, {}, spec, q);
    double ref = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    CHECK(out[0] == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("kde: symmetric pair evaluated at the midpoint") {
  double a = 0.8;
  std::vector<double> pts{-a, a};
  MollifierSpec spec;
  spec.bandwidth = 0.5;
  std::vector<double> q{0.0};
  auto out = kde(pts, {}, spec, q);
  double dx[1] = {a};
  CHECK(out[0] == doctest::Approx(spec.value(dx)).epsilon(1e-12));
}

TEST_CASE("kde: 1e5 normal draws within 0.03 of the true density in L1") {
  Rng rng(20240801);
  const int n = 100000;
  std::vector<double> pts(n);
  for (int i = 0; i < n; ++i) pts[i] = rng.normal(i, 0, RngChannel::init_x, 0);
  MollifierSpec spec;
  spec.bandwidth = 0.1;
  int m = 512;
  double L = 6.0, h = 2.0 * L / m;
  auto vals = kde_grid(pts, {}, spec, -L, h, m);
  double err = 0.0, mass = 0.0;
  for (int i = 0; i < m; ++i) {
    double x = -L + (i + 0.5) * h;
    err += std::abs(vals[i] - std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI));
    mass += vals[i];
  }
  CHECK(err * h <= 0.03);
  CHECK(mass * h == doctest::Approx(1.0).epsilon(1e-6));
  for (double v : vals) CHECK(v >= 0.0);
}

TEST_CASE("kde_grid agrees with the direct kde sum") {
  Rng rng(3);
  std::vector<double> pts(500);
  for (size_t i = 0; i < pts.size(); ++i)
    pts[i] = rng.normal(i, 0, RngChannel::init_x, 0);
  MollifierSpec spec;
  spec.bandwidth = 0.25;
  int m = 128;
  double L = 5.0, h = 2.0 * L / m;
  auto grid_vals = kde_grid(pts, {}, spec, -L, h, m);
  std::vector<double> queries(m);
  for (int i = 0; i < m; ++i) queries[i] = -L + (i + 0.5) * h;
  auto direct = kde(pts, {}, spec, queries);
  for (int i = 0; i < m; ++i)
    // Cloud-in-cell binning introduces O(h^2/bandwidth^2) smoothing error.
    CHECK(grid_vals[i] == doctest::Approx(direct[i]).epsilon(0.05));
}

TEST_CASE("kde: weight scale invariance") {
  std::vector<double> pts{-1.0, 0.2, 0.9};
  std::vector<double> w1{1.0, 2.0, 0.5}, w2{7.0, 14.0, 3.5};
  MollifierSpec spec;
  spec.bandwidth = 0.4;
  std::vector<double> q{-0.5, 0.0, 0.5};
  auto a = kde(pts, w1, spec, q);
  auto b = kde(pts, w2, spec, q);
  for (size_t i = 0; i < q.size(); ++i)
    CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));
}

TEST_CASE("kde: vanishing bandwidth raises BandwidthError") {
  std::vector<double> pts{0.0, 1.0};
  MollifierSpec spec;
  spec.bandwidth = 1e-300;
  std::vector<double> q{0.5};
  CHECK_THROWS_AS(kde(pts, {}, spec, q), BandwidthError);
}

TEST_CASE("default_bandwidth follows the Silverman rule") {
  Rng rng(11);
  std::vector<double> xs(10000);
  double sum = 0.0, sumsq = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    xs[i] = 2.0 * rng.normal(i, 0, RngChannel::init_x, 0);
    sum += xs[i];
    sumsq += xs[i] * xs[i];
  }
  double n = double(xs.size());
  double sd = std::sqrt(sumsq / n - (sum / n) * (sum / n));
  CHECK(default_bandwidth(xs) ==
        doctest::Approx(1.06 * sd * std::pow(n, -0.2)).epsilon(1e-2));
}

TEST_CASE("nw_conditional: coincident predictors give the weighted mean") {
  std::vector<double> xs{2.0, 2.0, 2.0}, ys{1.0, 3.0, 5.0};
  std::vector<double> w{1.0, 1.0, 2.0};
  auto ident = [](double y) { return y; };
  std::vector<double> q{2.0};
  auto est = nw_conditional(xs, ys, w, ident, 0.3, q);
  CHECK(est.values[0] == doctest::Approx((1.0 + 3.0 + 10.0) / 4.0).epsilon(1e-12));
  CHECK(!est.degenerate[0]);
}

TEST_CASE("nw_conditional: constant target is reproduced exactly") {
  Rng rng(4);
  std::vector<double> xs(200), ys(200);
  for (int i = 0; i < 200; ++i) {
    xs[i] = rng.normal(i, 0, RngChannel::init_x, 0);
    ys[i] = rng.normal(i, 0, RngChannel::init_y, 0);
  }
  auto cfn = [](double) { return 2.5; };
  std::vector<double> q{-1.0, 0.0, 1.0};
  auto est = nw_conditional(xs, ys, {}, cfn, 0.5, q);
  for (size_t i = 0; i < q.size(); ++i)
    CHECK(est.values[i] == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("nw_conditional: two separated clusters") {
  std::vector<double> xs, ys;
  for (int i = 0; i < 50; ++i) {
    xs.push_back(-1.0);
    ys.push_back(-1.0);
    xs.push_back(1.0);
    ys.push_back(1.0);
  }
  auto ident = [](double y) { return y; };
  std::vector<double> q{-1.0};
  auto est = nw_conditional(xs, ys, {}, ident, 0.05, q);
  CHECK(std::abs(est.values[0] - (-1.0)) <= 1e-6);
}

TEST_CASE("nw_conditional: estimates bounded by sup |m| and weight invariant") {
  Rng rng(9);
  int n = 1000;
  std::vector<double> xs(n), ys(n), w(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = rng.normal(i, 0, RngChannel::init_x, 0);
    ys[i] = rng.normal(i, 0, RngChannel::init_y, 0);
    w[i] = rng.uniform(i, 0, RngChannel::scratch, 0) + 0.1;
  }
  auto m = [](double y) { return std::tanh(3.0 * y); };
  std::vector<double> q;
  for (int i = 0; i <= 40; ++i) q.push_back(-4.0 + 0.2 * i);
  auto est = nw_conditional(xs, ys, w, m, 0.2, q);
  for (double v : est.values) CHECK(std::abs(v) <= 1.0 + 1e-12);
  std::vector<double> w2 = w;
  for (auto& x : w2) x *= 123.0;
  auto est2 = nw_conditional(xs, ys, w2, m, 0.2, q);
  for (size_t i = 0; i < q.size(); ++i)
    CHECK(est.values[i] == doctest::Approx(est2.values[i]).epsilon(1e-12));
}

TEST_CASE("nw_conditional: far query degenerates to zero with a flag") {
  std::vector<double> xs{0.0}, ys{5.0};
  auto ident = [](double y) { return y; };
  std::vector<double> q{1000.0};
  auto est = nw_conditional(xs, ys, {}, ident, 0.01, q);
  CHECK(est.values[0] == 0.0);
  CHECK(bool(est.degenerate[0]));
  CHECK(est.effective_mass[0] <= 1e-300);
}

TEST_CASE("binned_conditional: one bin is the global weighted mean") {
  std::vector<double> xs{-1.0, 0.0, 2.0}, ys{1.0, 2.0, 6.0};
  std::vector<double> w{1.0, 1.0, 0.5};
  auto ident = [](double y) { return y; };
  auto est = binned_conditional(xs, ys, w, ident, 2, -3.0, 3.0);
  REQUIRE(est.values.size() == 2);
  // Left bin [-3,0) holds only x = -1; right bin averages x = 0 and x = 2
  // with weights 1 and 0.5: (2 + 3) / 1.5.
  CHECK(est.values.front() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(est.values.back() == doctest::Approx(10.0 / 3.0).epsilon(1e-12));
  // A bin covering the whole sample reduces to the global weighted mean.
  auto whole = binned_conditional(xs, ys, w, ident, 2, -4.0, 12.0);
  CHECK(whole.values.front() ==
        doctest::Approx((1.0 + 2.0 + 3.0) / 2.5).epsilon(1e-12));
}

TEST_CASE("binned_conditional: deterministic Y = X tracks bin centers") {
  int n = 20000, n_bins = 32;
  Rng rng(6);
  std::vector<double> xs(n), ys(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = 4.0 * rng.uniform(i, 0, RngChannel::init_x, 0) - 2.0;
    ys[i] = xs[i];
  }
  auto ident = [](double y) { return y; };
  auto est = binned_conditional(xs, ys, {}, ident, n_bins, -2.0, 2.0);
  double w = 4.0 / n_bins;
  for (int b = 0; b < n_bins; ++b) {
    double center = -2.0 + (b + 0.5) * w;
    CHECK(std::abs(est.values[b] - center) <= w);  // mean within the bin
  }
}

TEST_CASE("binned_conditional: empty bins inherit the nearest value") {
  std::vector<double> xs{-2.0, 2.0}, ys{-5.0, 5.0};
  auto ident = [](double y) { return y; };
  auto est = binned_conditional(xs, ys, {}, ident, 8, -2.5, 2.5);
  REQUIRE(est.values.size() == 8);
  CHECK(est.values[0] == doctest::Approx(-5.0));
  CHECK(est.values[7] == doctest::Approx(5.0));
  // Interior empty bins are flagged and carry a neighbor's value.
  for (int b = 2; b <= 5; ++b) {
    CHECK(bool(est.degenerate[b]));
    CHECK((est.values[b] == doctest::Approx(-5.0) ||
           est.values[b] == doctest::Approx(5.0)));
  }
}

TEST_CASE("binned matches NW on a smooth joint sample") {
  Rng rng(12);
  int n = 20000;
  std::vector<double> xs(n), ys(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = rng.normal(i, 0, RngChannel::init_x, 0);
    ys[i] = std::sin(xs[i]) + 0.3 * rng.normal(i, 0, RngChannel::init_y, 0);
  }
  auto ident = [](double y) { return y; };
  double bw = 0.125;
  int n_bins = 16;  // bin width 0.25 over [-2, 2], comparable to bw
  auto binned = binned_conditional(xs, ys, {}, ident, n_bins, -2.0, 2.0);
  std::vector<double> centers(n_bins);
  for (int b = 0; b < n_bins; ++b) centers[b] = -2.0 + (b + 0.5) * 0.25;
  auto nw = nw_conditional(xs, ys, {}, ident, bw, centers);
  // The two estimators carry different smoothing bias; they must agree to
  // the scale of that bias, not to sampling noise.
  for (int b = 0; b < n_bins; ++b)
    CHECK(std::abs(binned.values[b] - nw.values[b]) <= 0.2);
}

TEST_CASE("nw error vs analytic conditional decreases with N") {
  // E[Y|X=x] = sin(x); b = N^{-1/5} scaling.
  auto run = [](int n, uint64_t seed) {
    Rng rng(seed);
    std::vector<double> xs(n), ys(n);
    for (int i = 0; i < n; ++i) {
      xs[i] = rng.normal(i, 0, RngChannel::init_x, 0);
      ys[i] = std::sin(xs[i]) + 0.3 * rng.normal(i, 0, RngChannel::init_y, 0);
    }
    double bw = std::pow(double(n), -0.2);
    std::vector<double> q;
    for (int i = 0; i <= 20; ++i) q.push_back(-1.5 + 0.15 * i);
    auto ident = [](double y) { return y; };
    auto est = nw_conditional(xs, ys, {}, ident, bw, q);
    double err = 0.0;
    for (size_t i = 0; i < q.size(); ++i)
      err = std::max(err, std::abs(est.values[i] - std::sin(q[i])));
    return err;
  };
  double e3 = run(1000, 41), e4 = run(10000, 41), e5 = run(100000, 41);
  CHECK(e4 <= e3);
  CHECK(e5 <= e4);
}
