#include "mclab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mclab {

void GridSpec::validate() const {
  if (n_cells < 16) throw std::invalid_argument("GridSpec: n_cells < 16");
  if (dt <= 0.0) throw std::invalid_argument("GridSpec: dt <= 0");
  if (half_width <= 0.0) throw std::invalid_argument("GridSpec: L <= 0");
  if (n_steps < 0) throw std::invalid_argument("GridSpec: n_steps < 0");
}

double DensityField::mass() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * h;
}

double DensityField::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double DensityField::l1_distance(const DensityField& other) const {
  double s = 0.0;
  for (size_t i = 0; i < values.size(); ++i)
    s += std::abs(values[i] - other.values[i]);
  return s * h;
}

double DensityField::l2_norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s * h);
}

double PathField::space_time_l2() const {
  double s = 0.0;
  for (const auto& snap : snapshots) {
    double n = snap.l2_norm();
    s += n * n * dt;
  }
  return std::sqrt(s);
}

double PathField::space_time_l2_distance(const PathField& other) const {
  double s = 0.0;
  for (size_t k = 0; k < snapshots.size(); ++k) {
    const auto& a = snapshots[k].values;
    const auto& b = other.snapshots[k].values;
    double cell = 0.0;
    for (size_t i = 0; i < a.size(); ++i) cell += (a[i] - b[i]) * (a[i] - b[i]);
    s += cell * snapshots[k].h * dt;
  }
  return std::sqrt(s);
}

DensityField project_initial(const std::function<double(double)>& u0,
                             const GridSpec& grid, double mass_tol) {
  grid.validate();
  double h = grid.h();
  DensityField f;
  f.h = h;
  f.values.resize(grid.n_cells);
  double interior_mass = 0.0, margin_mass = 0.0;
  for (int i = 0; i < grid.n_cells; ++i) {
    double v = std::max(0.0, u0(grid.x(i)));
    f.values[i] = v;
    if (i < 5 || i >= grid.n_cells - 5)
      margin_mass += v * h;
    else
      interior_mass += v * h;
  }
  // Tail mass outside [-L+5h, L-5h]: whatever the truncation cut off plus the
  // mass landing in the 5-cell margin.
  double tail = std::abs(1.0 - interior_mass - margin_mass) + margin_mass;
  if (tail > mass_tol) {
    std::ostringstream msg;
    msg << "project_initial: tail mass " << tail << " exceeds " << mass_tol
        << " (domain half-width too small)";
    throw TruncationError(msg.str());
  }
  double total = interior_mass + margin_mass;
  for (auto& v : f.values) v /= total;
  return f;
}

std::function<double(double)> gaussian_density(double mean, double variance) {
  double inv = 1.0 / std::sqrt(2.0 * M_PI * variance);
  return [=](double x) {
    double z = x - mean;
    return inv * std::exp(-0.5 * z * z / variance);
  };
}

std::function<double(double)> uniform_density(double a, double b) {
  double inv = 1.0 / (b - a);
  return [=](double x) { return (x >= a && x <= b) ? inv : 0.0; };
}

std::function<double(double)> triangle_density(double center,
                                               double half_width) {
  return [=](double x) {
    double z = std::abs(x - center) / half_width;
    return z >= 1.0 ? 0.0 : (1.0 - z) / half_width;
  };
}

std::function<double(double)> barenblatt_density_m2(double t0) {
  // u(t,x) = U(t/2, x) where U is the unit-mass m=2 profile for u_t = Lap(u^2).
  double tau = 0.5 * t0;
  double c = std::cbrt(3.0) / 4.0;
  double t13 = std::cbrt(tau);
  return [=](double x) {
    return std::max(0.0, (c - x * x / (12.0 * t13 * t13)) / t13);
  };
}

std::function<double(double)> density_from_spec(const std::string& spec) {
  size_t open = spec.find('(');
  std::string head = spec.substr(0, open);
  std::string inner = spec.substr(open + 1, spec.rfind(')') - open - 1);
  std::replace(inner.begin(), inner.end(), ',', ' ');
  std::istringstream ss(inner);
  std::vector<double> a;
  double v;
  while (ss >> v) a.push_back(v);
  if (head == "gaussian") return gaussian_density(a.at(0), a.at(1));
  if (head == "uniform") return uniform_density(a.at(0), a.at(1));
  if (head == "triangle") return triangle_density(a.at(0), a.at(1));
  if (head == "barenblatt") return barenblatt_density_m2(a.at(0));
  throw std::runtime_error("unknown density spec: " + spec);
}

}  // namespace mclab
