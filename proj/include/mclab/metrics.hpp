#ifndef MCLAB_METRICS_HPP
#define MCLAB_METRICS_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace mclab {

double l1_norm(std::span<const double> v, double h);
double l2_norm(std::span<const double> v, double h);
double linf_norm(std::span<const double> v);

// W1 between two empirical measures on R. Counts are equalized by evaluating
// both quantile functions on a common lattice.
double wasserstein1_1d(std::vector<double> samples_a,
                       std::vector<double> samples_b);

// W1 between two densities given as cell values on the same uniform grid:
// L1 distance of CDFs.
double wasserstein1_1d_densities(std::span<const double> density_a,
                                 std::span<const double> density_b, double h);

// W1 between an empirical measure (optionally weighted) and a density on a
// uniform grid [x0, x0 + n*h): integral over the grid of |F_emp - F_dens|.
double wasserstein1_1d_samples_density(std::vector<double> samples,
                                       std::vector<double> weights,
                                       std::span<const double> density,
                                       double x0, double h);

// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace mclab

#endif
