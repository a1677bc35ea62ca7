#ifndef MCLAB_GRID_HPP
#define MCLAB_GRID_HPP

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mclab {

struct TruncationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Uniform cell-centered grid on [-L, L] with n_cells cells and a time lattice
// of n_steps steps of size dt.
struct GridSpec {
  double half_width = 8.0;  // L
  int n_cells = 512;
  double dt = 1e-3;
  int n_steps = 500;

  double h() const { return 2.0 * half_width / n_cells; }
  double t_final() const { return dt * n_steps; }
  // Center of cell i.
  double x(int i) const { return -half_width + (i + 0.5) * h(); }
  void validate() const;
};

// Piecewise-constant probability density: cell averages on a GridSpec.
struct DensityField {
  std::vector<double> values;
  double h = 0.0;

  double mass() const;
  double max_abs() const;
  double l1_distance(const DensityField& other) const;
  double l2_norm() const;
};

// Time-indexed stack of density snapshots, one per step, snapshot 0 = u0.
struct PathField {
  std::vector<DensityField> snapshots;
  double dt = 0.0;
  GridSpec grid;

  // L2((0,T) x grid) norm of the stack (left-endpoint in time).
  double space_time_l2() const;
  double space_time_l2_distance(const PathField& other) const;
};

// Cell averages by midpoint quadrature, renormalized to mass 1. Throws
// TruncationError when the tail mass outside [-L+5h, L-5h] exceeds mass_tol.
DensityField project_initial(const std::function<double(double)>& u0,
                             const GridSpec& grid, double mass_tol = 1e-6);

// Initial-density presets on R.
std::function<double(double)> gaussian_density(double mean, double variance);
std::function<double(double)> uniform_density(double a, double b);
std::function<double(double)> triangle_density(double center, double half_width);
// Self-similar profile for u_t = 1/2 Lap(u^2) (m = 2) at time t0.
std::function<double(double)> barenblatt_density_m2(double t0);
std::function<double(double)> density_from_spec(const std::string& spec);

}  // namespace mclab

#endif
