#include "mclab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mclab {

double l1_norm(std::span<const double> v, double h) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s * h;
}

double l2_norm(std::span<const double> v, double h) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s * h);
}

double linf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

namespace {

// Empirical quantile at level p in (0,1) of sorted samples.
double quantile_sorted(const std::vector<double>& s, double p) {
  double pos = p * static_cast<double>(s.size()) - 0.5;
  if (pos <= 0.0) return s.front();
  if (pos >= static_cast<double>(s.size() - 1)) return s.back();
  size_t i = static_cast<size_t>(pos);
  double frac = pos - static_cast<double>(i);
  return s[i] * (1.0 - frac) + s[i + 1] * frac;
}

}  // namespace

double wasserstein1_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("wasserstein1_1d: empty sample set");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a.size() == b.size()) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / static_cast<double>(a.size());
  }
  size_t m = std::max(a.size(), b.size());
  double s = 0.0;
  for (size_t j = 0; j < m; ++j) {
    double p = (static_cast<double>(j) + 0.5) / static_cast<double>(m);
    s += std::abs(quantile_sorted(a, p) - quantile_sorted(b, p));
  }
  return s / static_cast<double>(m);
}

double wasserstein1_1d_densities(std::span<const double> a,
                                 std::span<const double> b, double h) {
  if (a.size() != b.size())
    throw std::invalid_argument("wasserstein1_1d_densities: size mismatch");
  double fa = 0.0, fb = 0.0, s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    fa += a[i] * h;
    fb += b[i] * h;
    s += std::abs(fa - fb) * h;
  }
  return s;
}

double wasserstein1_1d_samples_density(std::vector<double> samples,
                                       std::vector<double> weights,
                                       std::span<const double> density,
                                       double x0, double h) {
  size_t n = density.size();
  if (weights.empty()) weights.assign(samples.size(), 1.0);
  if (weights.size() != samples.size())
    throw std::invalid_argument("weights/samples size mismatch");
  double wtot = std::accumulate(weights.begin(), weights.end(), 0.0);
  // Weighted empirical CDF accumulated cell by cell.
  std::vector<double> cell_mass(n, 0.0);
  for (size_t i = 0; i < samples.size(); ++i) {
    double pos = (samples[i] - x0) / h;
    long k = static_cast<long>(std::floor(pos));
    k = std::clamp<long>(k, 0, static_cast<long>(n) - 1);
    cell_mass[static_cast<size_t>(k)] += weights[i] / wtot;
  }
  double fe = 0.0, fd = 0.0, s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    fe += cell_mass[i];
    fd += density[i] * h;
    s += std::abs(fe - fd) * h;
  }
  return s;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("loglog_slope: need >= 2 matched points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double n = static_cast<double>(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace mclab
