#include "mclab/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace mclab {

double DiffusionModel::sigma_prime_at(double r) const {
  if (sigma_prime) return sigma_prime(r);
  double h = std::max(1e-6, 1e-6 * r);
  double lo = std::max(0.0, r - h);
  return (sigma(r + h) - sigma(lo)) / (r + h - lo);
}

namespace {

void check_domain(const DiffusionModel& model, double r) {
  if (r < 0.0 || r > model.r_max)
    throw std::domain_error("coefficients: r outside [0, r_max]");
}

// Adaptive Simpson with absolute-per-interval error control.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double fa, double fm, double fb, double tol,
                        int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol) {
  if (b <= a) return 0.0;
  double m = 0.5 * (a + b);
  double coarse = (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
  double tol = rel_tol * std::max(1e-30, std::abs(coarse));
  return adaptive_simpson(f, a, b, f(a), f(m), f(b), tol, 48);
}

}  // namespace

double alpha(const DiffusionModel& model, double r) {
  check_domain(model, r);
  if (model.alpha_fn) return model.alpha_fn(r);
  double s = model.sigma(r);
  return 2.0 * model.sigma_prime_at(r) * s * r + s * s;
}

double alpha_eps(const DiffusionModel& model, double r, double eps) {
  if (eps <= 0.0) throw std::domain_error("alpha_eps: eps must be positive");
  return alpha(model, r) + eps;
}

std::pair<double, double> phi_psi_eps(const DiffusionModel& model, double r,
                                      double eps) {
  check_domain(model, r);
  auto phi = [&](double t) {
    double s = model.sigma(t);
    return (s * s + eps) * t;
  };
  return {phi(r), integrate(phi, 0.0, r, 1e-10)};
}

HypothesisReport check_hypotheses(const DiffusionModel& model, int n_samples,
                                  double u_max) {
  if (u_max > model.r_max)
    throw std::domain_error("check_hypotheses: u_max exceeds r_max");
  n_samples = std::max(n_samples, 2);
  HypothesisReport rep;
  rep.a1_ok = true;
  rep.a2_ok = true;
  rep.a2weak_ok = true;
  rep.strictly_increasing_ok = true;
  rep.eta = std::numeric_limits<double>::infinity();
  double prev = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    double r = u_max * static_cast<double>(i) / (n_samples - 1);
    double s = model.sigma(r);
    double a = alpha(model, r);
    if (!std::isfinite(s) || !std::isfinite(a) || s < 0.0) rep.a1_ok = false;
    if (a < rep.eta) rep.eta = a;
    if (a <= 1e-12 && rep.a2_ok) {
      rep.a2_ok = false;
      rep.witness_a2 = r;
    }
    if (a < -1e-12) rep.a2weak_ok = false;
    if (i > 0 && a <= prev && rep.strictly_increasing_ok) {
      rep.strictly_increasing_ok = false;
      rep.witness_monotone = r;
    }
    prev = a;
  }
  return rep;
}

DiffusionModel make_constant_model(double s0, double r_max) {
  DiffusionModel m;
  m.sigma = [s0](double) { return s0; };
  m.sigma_prime = [](double) { return 0.0; };
  m.r_max = r_max;
  std::ostringstream n;
  n << "constant(" << s0 << ")";
  m.name = n.str();
  return m;
}

DiffusionModel make_sqrt_affine_model(double a, double b, double r_max) {
  DiffusionModel m;
  m.sigma = [a, b](double r) { return std::sqrt(a + b * r); };
  m.sigma_prime = [a, b](double r) { return 0.5 * b / std::sqrt(a + b * r); };
  // alpha = ((a + b r) r)' = a + 2 b r; valid also at the sigma'=inf edge a=0.
  m.alpha_fn = [a, b](double r) { return a + 2.0 * b * r; };
  m.r_max = r_max;
  std::ostringstream n;
  n << "sqrt_affine(" << a << "," << b << ")";
  m.name = n.str();
  return m;
}

DiffusionModel make_pme_model(double mexp, double r_max) {
  DiffusionModel m;
  m.sigma = [mexp](double r) { return std::pow(r, 0.5 * (mexp - 1.0)); };
  // alpha = (r^m)' = m r^(m-1); finite at r = 0 for m >= 1.
  m.alpha_fn = [mexp](double r) {
    return mexp * std::pow(r, mexp - 1.0);
  };
  m.r_max = r_max;
  std::ostringstream n;
  n << "pme(" << mexp << ")";
  m.name = n.str();
  return m;
}

namespace {

// Fritsch-Carlson monotone cubic interpolation of (x, y) knots.
struct Pchip {
  std::vector<double> x, y, d;  // d = knot derivatives
  double eval(double q) const {
    if (q <= x.front()) return y.front();
    if (q >= x.back()) return y.back();
    size_t i = static_cast<size_t>(
        std::upper_bound(x.begin(), x.end(), q) - x.begin() - 1);
    double h = x[i + 1] - x[i], t = (q - x[i]) / h;
    double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
    double h10 = t * (1 - t) * (1 - t);
    double h01 = t * t * (3 - 2 * t);
    double h11 = t * t * (t - 1);
    return h00 * y[i] + h10 * h * d[i] + h01 * y[i + 1] + h11 * h * d[i + 1];
  }
  double deriv(double q) const {
    if (q <= x.front() || q >= x.back()) return 0.0;
    size_t i = static_cast<size_t>(
        std::upper_bound(x.begin(), x.end(), q) - x.begin() - 1);
    double h = x[i + 1] - x[i], t = (q - x[i]) / h;
    double g00 = 6 * t * t - 6 * t;
    double g10 = 3 * t * t - 4 * t + 1;
    double g01 = -6 * t * t + 6 * t;
    double g11 = 3 * t * t - 2 * t;
    return (g00 * y[i] + g01 * y[i + 1]) / h + g10 * d[i] + g11 * d[i + 1];
  }
};

Pchip build_pchip(std::vector<double> x, std::vector<double> y) {
  size_t n = x.size();
  std::vector<double> slope(n - 1), d(n);
  for (size_t i = 0; i + 1 < n; ++i)
    slope[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
  d[0] = slope[0];
  d[n - 1] = slope[n - 2];
  for (size_t i = 1; i + 1 < n; ++i) {
    if (slope[i - 1] * slope[i] <= 0.0) {
      d[i] = 0.0;
    } else {
      double w1 = 2.0 * (x[i + 1] - x[i]) + (x[i] - x[i - 1]);
      double w2 = (x[i + 1] - x[i]) + 2.0 * (x[i] - x[i - 1]);
      d[i] = (w1 + w2) / (w1 / slope[i - 1] + w2 / slope[i]);
    }
  }
  return {std::move(x), std::move(y), std::move(d)};
}

}  // namespace

DiffusionModel make_tabulated_model(const std::string& csv_path) {
  std::ifstream f(csv_path);
  if (!f) throw std::runtime_error("tabulated model: cannot open " + csv_path);
  std::vector<double> xs, ys;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double r, s;
    if (ls >> r >> s) {
      xs.push_back(r);
      ys.push_back(s);
    }
  }
  if (xs.size() < 2)
    throw std::runtime_error("tabulated model: need >= 2 rows in " + csv_path);
  auto interp = std::make_shared<Pchip>(build_pchip(xs, ys));
  DiffusionModel m;
  m.sigma = [interp](double r) { return interp->eval(r); };
  m.sigma_prime = [interp](double r) { return interp->deriv(r); };
  m.r_max = xs.back();
  m.name = "tabulated(" + csv_path + ")";
  return m;
}

DiffusionModel make_model_from_spec(const std::string& spec, double r_max) {
  auto args_of = [&](size_t open) {
    std::string inner = spec.substr(open + 1, spec.rfind(')') - open - 1);
    std::replace(inner.begin(), inner.end(), ',', ' ');
    std::istringstream ss(inner);
    std::vector<double> out;
    double v;
    while (ss >> v) out.push_back(v);
    return out;
  };
  if (spec.rfind("csv:", 0) == 0) return make_tabulated_model(spec.substr(4));
  size_t open = spec.find('(');
  std::string head = spec.substr(0, open);
  if (head == "constant") {
    auto a = args_of(open);
    return make_constant_model(a.at(0), r_max);
  }
  if (head == "sqrt_affine") {
    auto a = args_of(open);
    return make_sqrt_affine_model(a.at(0), a.at(1), r_max);
  }
  if (head == "pme") {
    auto a = args_of(open);
    return make_pme_model(a.at(0), r_max);
  }
  throw std::runtime_error("unknown model spec: " + spec);
}

}  // namespace mclab
