#ifndef MCLAB_COEFFICIENTS_HPP
#define MCLAB_COEFFICIENTS_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mclab {

// Scalar diffusion law r -> sigma(r) on [0, r_max] together with everything
// derived from it: the divergence-form coefficient
//   alpha(r) = (sigma^2(r) r)' = 2 sigma'(r) sigma(r) r + sigma^2(r),
// its lifted version alpha_eps = alpha + eps, and the pair
//   Phi_eps(r) = (sigma^2(r)+eps) r,  Psi_eps(r) = int_0^r Phi_eps.
struct DiffusionModel {
  std::function<double(double)> sigma;
  std::function<double(double)> sigma_prime;  // empty => finite difference
  std::function<double(double)> alpha_fn;     // optional analytic override
  double r_max = 1.0;
  std::string name = "custom";

  double sigma_prime_at(double r) const;
};

struct HypothesisReport {
  bool a1_ok = false;
  bool a2_ok = false;
  bool a2weak_ok = false;
  bool strictly_increasing_ok = false;
  double eta = 0.0;           // infimum of alpha over the sample grid
  double witness_a2 = 0.0;     // sample point of the failing check, if any
  double witness_monotone = 0.0;
};

double alpha(const DiffusionModel& model, double r);
double alpha_eps(const DiffusionModel& model, double r, double eps);
// Returns {Phi_eps(r), Psi_eps(r)}; Psi by adaptive quadrature, rel err 1e-10.
std::pair<double, double> phi_psi_eps(const DiffusionModel& model, double r,
                                      double eps);
HypothesisReport check_hypotheses(const DiffusionModel& model, int n_samples,
                                  double u_max);

// Named presets.
DiffusionModel make_constant_model(double s0, double r_max);
DiffusionModel make_sqrt_affine_model(double a, double b, double r_max);
DiffusionModel make_pme_model(double m, double r_max);  // sigma^2(r) = r^(m-1)
// Two-column CSV (r, sigma), monotone-cubic interpolation.
DiffusionModel make_tabulated_model(const std::string& csv_path);
// "constant(1)", "sqrt_affine(1,1)", "pme(2)", "csv:path".
DiffusionModel make_model_from_spec(const std::string& spec, double r_max);

}  // namespace mclab

#endif
