#include "mclab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mclab {

double MollifierSpec::kernel1d(double z) const {
  switch (shape) {
    case MollifierShape::gaussian:
      return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    case MollifierShape::epanechnikov: {
      double q = 1.0 - z * z;
      return q > 0.0 ? 0.75 * q : 0.0;
    }
  }
  return 0.0;
}

double MollifierSpec::value(std::span<const double> dx) const {
  double v = 1.0;
  for (double c : dx) v *= kernel1d(c / bandwidth) / bandwidth;
  return v;
}

double default_bandwidth(std::span<const double> xs) {
  double n = static_cast<double>(xs.size());
  double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= std::max(1.0, n - 1.0);
  return 1.06 * std::sqrt(var) * std::pow(n, -0.2);
}

namespace {

void check_bandwidth(std::span<const double> points, double bandwidth) {
  double scale = 1.0;
  for (double p : points) scale = std::max(scale, std::abs(p));
  if (bandwidth < 64.0 * std::numeric_limits<double>::epsilon() * scale)
    throw BandwidthError("bandwidth below machine-epsilon-scaled floor");
}

}  // namespace

std::vector<double> kde(std::span<const double> points,
                        std::span<const double> weights,
                        const MollifierSpec& spec,
                        std::span<const double> query) {
  int d = spec.dimension;
  size_t n = points.size() / d;
  if (n == 0) throw std::invalid_argument("kde: empty sample set");
  check_bandwidth(points, spec.bandwidth);
  double wtot;
  if (weights.empty()) {
    wtot = static_cast<double>(n);
  } else {
    wtot = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (wtot <= 0.0) throw std::invalid_argument("kde: weights sum <= 0");
  }
  size_t nq = query.size() / d;
  std::vector<double> out(nq, 0.0);
  std::vector<double> dx(d);
  for (size_t q = 0; q < nq; ++q) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
      for (int c = 0; c < d; ++c)
        dx[c] = query[q * d + c] - points[i * d + c];
      double w = weights.empty() ? 1.0 : weights[i];
      acc += w * spec.value(dx);
    }
    out[q] = acc / wtot;
  }
  return out;
}

std::vector<double> kde_grid(std::span<const double> points,
                             std::span<const double> weights,
                             const MollifierSpec& spec, double x0, double h,
                             int n) {
  size_t np = points.size();
  if (np == 0) throw std::invalid_argument("kde_grid: empty sample set");
  check_bandwidth(points, spec.bandwidth);
  double wtot;
  if (weights.empty()) {
    wtot = static_cast<double>(np);
  } else {
    wtot = std::accumulate(weights.begin(), weights.end(), 0.0);
  }

  // Cloud-in-cell mass deposit (cell centers at x0 + (i+0.5)h).
  std::vector<double> mass(n, 0.0);
  for (size_t i = 0; i < np; ++i) {
    double w = (weights.empty() ? 1.0 : weights[i]) / wtot;
    double pos = (points[i] - x0) / h - 0.5;
    long k = static_cast<long>(std::floor(pos));
    double frac = pos - static_cast<double>(k);
    long k0 = std::clamp<long>(k, 0, n - 1);
    long k1 = std::clamp<long>(k + 1, 0, n - 1);
    mass[static_cast<size_t>(k0)] += w * (1.0 - frac);
    mass[static_cast<size_t>(k1)] += w * frac;
  }

  // Sampled kernel, truncated and renormalized so the discrete mass is exact.
  double cutoff = spec.shape == MollifierShape::gaussian
                      ? 6.0 * spec.bandwidth
                      : spec.bandwidth;
  int half = std::max(1, static_cast<int>(std::ceil(cutoff / h)));
  std::vector<double> ker(2 * half + 1);
  double ker_sum = 0.0;
  for (int j = -half; j <= half; ++j) {
    ker[j + half] = spec.kernel1d(j * h / spec.bandwidth);
    ker_sum += ker[j + half];
  }
  for (auto& v : ker) v /= ker_sum * h;

  std::vector<double> out(n, 0.0);
  for (int i = 0; i < n; ++i) {
    if (mass[i] == 0.0) continue;
    int lo = std::max(0, i - half), hi = std::min(n - 1, i + half);
    for (int j = lo; j <= hi; ++j) out[j] += mass[i] * ker[j - i + half];
  }
  return out;
}

ConditionalEstimate nw_conditional(std::span<const double> xs,
                                   std::span<const double> ys,
                                   std::span<const double> weights,
                                   const std::function<double(double)>& m,
                                   double bandwidth,
                                   std::span<const double> query,
                                   double denom_floor) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("nw_conditional: paired lengths differ");
  if (bandwidth <= 0.0)
    throw std::invalid_argument("nw_conditional: bandwidth <= 0");
  size_t n = xs.size();
  std::vector<double> my(n);
  for (size_t i = 0; i < n; ++i) my[i] = m(ys[i]);

  ConditionalEstimate est;
  est.values.resize(query.size());
  est.effective_mass.resize(query.size());
  est.degenerate.resize(query.size(), false);
  for (size_t q = 0; q < query.size(); ++q) {
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double z = (query[q] - xs[i]) / bandwidth;
      double k = std::exp(-0.5 * z * z);
      double w = weights.empty() ? 1.0 : weights[i];
      num += w * k * my[i];
      den += w * k;
    }
    est.effective_mass[q] = den;
    if (den < denom_floor) {
      est.values[q] = 0.0;  // indicator convention for a vanishing marginal
      est.degenerate[q] = true;
    } else {
      est.values[q] = num / den;
    }
  }
  return est;
}

ConditionalEstimate binned_conditional(std::span<const double> xs,
                                       std::span<const double> ys,
                                       std::span<const double> weights,
                                       const std::function<double(double)>& m,
                                       int n_bins, double x_lo, double x_hi) {
  if (n_bins < 1) throw std::invalid_argument("binned_conditional: n_bins < 1");
  if (xs.size() != ys.size())
    throw std::invalid_argument("binned_conditional: paired lengths differ");
  double width = (x_hi - x_lo) / n_bins;
  std::vector<double> num(n_bins, 0.0), den(n_bins, 0.0);
  for (size_t i = 0; i < xs.size(); ++i) {
    long b = static_cast<long>(std::floor((xs[i] - x_lo) / width));
    b = std::clamp<long>(b, 0, n_bins - 1);
    double w = weights.empty() ? 1.0 : weights[i];
    num[static_cast<size_t>(b)] += w * m(ys[i]);
    den[static_cast<size_t>(b)] += w;
  }
  ConditionalEstimate est;
  est.values.resize(n_bins);
  est.effective_mass.assign(den.begin(), den.end());
  est.degenerate.resize(n_bins, false);
  for (int b = 0; b < n_bins; ++b) {
    if (den[b] > 0.0) {
      est.values[b] = num[b] / den[b];
    } else {
      est.degenerate[b] = true;
    }
  }
  // Empty bins inherit the nearest nonempty neighbor.
  for (int b = 0; b < n_bins; ++b) {
    if (!est.degenerate[b]) continue;
    for (int off = 1; off < n_bins; ++off) {
      int lo = b - off, hi = b + off;
      if (lo >= 0 && !est.degenerate[lo]) {
        est.values[b] = est.values[lo];
        break;
      }
      if (hi < n_bins && !est.degenerate[hi]) {
        est.values[b] = est.values[hi];
        break;
      }
    }
  }
  return est;
}

}  // namespace mclab
