#ifndef MCLAB_ESTIMATORS_HPP
#define MCLAB_ESTIMATORS_HPP

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mclab {

struct BandwidthError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class MollifierShape { gaussian, epanechnikov };

// g_eps(x) = eps^-d g(x/eps); g integrates to 1 per coordinate.
struct MollifierSpec {
  MollifierShape shape = MollifierShape::gaussian;
  double bandwidth = 0.1;
  int dimension = 1;

  double kernel1d(double z) const;  // g(z), unscaled
  // Pointwise mollifier value at displacement dx (length `dimension`).
  double value(std::span<const double> dx) const;
};

// Silverman-type default: 1.06 std(x) N^{-1/5}.
double default_bandwidth(std::span<const double> xs);

// Weighted mollified empirical density at the query points. Points are stored
// flat, d entries per sample; queries likewise.
std::vector<double> kde(std::span<const double> points,
                        std::span<const double> weights,
                        const MollifierSpec& spec,
                        std::span<const double> query);

// Fast path for d=1 engines: cloud-in-cell binning onto a uniform grid
// followed by discrete convolution with the sampled mollifier. Returns cell
// values of the density on [x0, x0 + n*h).
std::vector<double> kde_grid(std::span<const double> points,
                             std::span<const double> weights,
                             const MollifierSpec& spec, double x0, double h,
                             int n);

struct ConditionalEstimate {
  std::vector<double> values;          // one per query (n_out=1 throughout)
  std::vector<double> effective_mass;  // kernel/bin mass behind each query
  std::vector<bool> degenerate;        // denominator under the floor
};

// Nadaraya-Watson estimate of E[m(Y)|X=x] at the query points (d=1).
// Degenerate denominators (< denom_floor) yield value 0 and a flag.
ConditionalEstimate nw_conditional(std::span<const double> xs,
                                   std::span<const double> ys,
                                   std::span<const double> weights,
                                   const std::function<double(double)>& m,
                                   double bandwidth,
                                   std::span<const double> query,
                                   double denom_floor = 1e-300);

// Piecewise-constant conditional regression: per-bin weighted mean of m(Y).
// Empty bins inherit the nearest nonempty bin's value and are flagged.
// Returned values are per bin; bin centers are x_lo + (i+0.5)*(x_hi-x_lo)/n.
ConditionalEstimate binned_conditional(std::span<const double> xs,
                                       std::span<const double> ys,
                                       std::span<const double> weights,
                                       const std::function<double(double)>& m,
                                       int n_bins, double x_lo, double x_hi);

}  // namespace mclab

#endif
