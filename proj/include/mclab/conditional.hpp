#ifndef MCLAB_CONDITIONAL_HPP
#define MCLAB_CONDITIONAL_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mclab/estimators.hpp"
#include "mclab/report.hpp"
#include "mclab/rng.hpp"

namespace mclab {

struct OverflowGuard : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConditionGuard : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scalar (d=1) coefficient set for the coupled system
//   dX = b(X,Y) dt + sigma(X) dB,   dY = E[ell(Y)|X] dt + E[gamma(Y)|X] dW.
struct CoefficientSet {
  std::function<double(double, double)> b;  // b(x, y)
  std::function<double(double)> sigma;      // sigma(x) > 0
  std::function<double(double)> ell;        // ell(y)
  std::function<double(double)> gamma;      // gamma(y)
  bool b_autonomous = false;                // b ignores y (or is zero)
  bool b_zero = false;
  double lip_ell = 0.0, lip_gamma = 0.0;
  double sup_ell = 0.0, sup_gamma = 0.0;
  double sup_sigma_inv_b = 0.0;  // sup |sigma^{-1} b|
  double ellipticity_sigma = 0.0;  // declared a* with sigma(x)^2 >= a*
  double ellipticity_gamma = 0.0;  // declared alpha* with gamma(y)^2 >= alpha*
  std::string name = "custom";
};

// Registered catalog: b in {zero, tanh, tanh_y}, sigma in {const:c},
// ell in {const:c, tanh, halfsin, identity},
// gamma in {const:c, tanh_affine, identity}.
CoefficientSet make_coefficients(const std::string& b_spec,
                                 const std::string& sigma_spec,
                                 const std::string& ell_spec,
                                 const std::string& gamma_spec);

// Random-sample ellipticity spot checks for (H3) and (H6).
VerificationReport spot_check_ellipticity(const CoefficientSet& coeffs,
                                          uint64_t seed, int n_samples = 256);

struct EstimatorConfig {
  enum class Type { binned, nw };
  Type type = Type::binned;
  int n_bins = 128;
  double bandwidth = 0.0;  // 0 => Silverman default from the X sample
  int nw_query_points = 129;  // NW is evaluated on a grid then interpolated
};

using PairSampler = std::function<std::pair<double, double>(
    const Rng&, uint64_t particle)>;  // draws (X0, Y0)

PairSampler independent_gaussian_pair(double mx, double sx, double my,
                                      double sy);

struct ConditionalRun {
  std::vector<std::vector<double>> x_snaps, y_snaps, z_snaps;
  std::vector<double> snap_times;
  // Full per-step paths, kept only when store_full_paths is set.
  std::vector<std::vector<double>> x_path, y_path;
  long degenerate_queries = 0;
  long bound_violations = 0;  // |Lambda_hat| > sup_ell or |Gamma_hat| > sup_gamma
  uint64_t seed = 0;
  double dt = 0.0;
  int n_steps = 0;
  bool is_q_run = false;
};

struct ConditionalOptions {
  int snapshot_stride = 10;
  bool store_full_paths = false;
};

// Direct simulation of the nonlinear system under P.
ConditionalRun simulate_conditional(const CoefficientSet& coeffs,
                                    const PairSampler& mu0, int n_particles,
                                    const EstimatorConfig& est, double dt,
                                    double t_final, uint64_t seed,
                                    const ConditionalOptions& opts = {});

// Drift-free simulation under Q with stepwise Girsanov weight accumulation:
// log Z += -(sigma^-1 b) dB_hat + 1/2 |sigma^-1 b|^2 dt. The Y-coefficients
// use Z^-1-weighted (self-normalized) conditional estimates.
ConditionalRun simulate_girsanov_q(const CoefficientSet& coeffs,
                                   const PairSampler& mu0, int n_particles,
                                   const EstimatorConfig& est, double dt,
                                   double t_final, uint64_t seed,
                                   const ConditionalOptions& opts = {});

// Recomputes the per-particle Z paths of a Q-run from its stored full paths,
// replaying the Brownian increments from the run's seed. Aborts with
// OverflowGuard when |log Z| exceeds 700.
std::vector<std::vector<double>> girsanov_weights(const ConditionalRun& q_run,
                                                  const CoefficientSet& coeffs);

struct PathNormSpec {
  double c = 1.0;  // exponential weight rate; contraction needs
                   // c > 2 (lip_ell^2 + lip_gamma^2)
  double dt = 1e-3;
  double t_final = 1.0;
};

struct PicardResult {
  std::vector<double> distances;  // D_k = ||zeta^{k+1} - zeta^k||_c
  bool no_contraction = false;    // D_k rose for 3 consecutive k
  double geometric_ratio = 0.0;   // fitted ratio before the noise floor
};

// Frozen-noise Picard iteration of zeta -> Y(zeta) in the weighted path norm.
// Requires autonomous X-dynamics (b zero or b(x) only). All iterates advance
// in lockstep over a single time sweep, sharing the X-paths and noise.
PicardResult picard_iterate(const CoefficientSet& coeffs, const PairSampler& mu0,
                            int n_particles, const PathNormSpec& norm,
                            int n_iterations, uint64_t seed,
                            const EstimatorConfig& est = {});

// Compares E_P[theta|X=x] from a P-run against the Z^-1-weighted estimate from
// a Q-run on a shared query grid (adequate-mass queries only).
VerificationReport weighted_conditional_check(
    const ConditionalRun& p_run, const ConditionalRun& q_run,
    const std::function<double(double, double)>& theta,  // theta(x, y)
    const EstimatorConfig& est, uint64_t seed);

// Empirical E_Q[Z_t] vs 1 and the conditional second-moment statistic
// E_Q[Z^2_t|X_t] Z_t^-2 against exp(3 T sup|sigma^-1 b|^2); the alternative
// exponent exp(3 T sup|sigma^-1 b|) is recorded alongside.
VerificationReport exp_mart_bound_check(const ConditionalRun& q_run,
                                        const CoefficientSet& coeffs,
                                        uint64_t seed);

// Two runs with identical noise but different estimator configurations;
// the Y-gap must shrink under simultaneous N-increase and bandwidth
// refinement. Includes the density-positivity diagnostic on [-R, R].
VerificationReport pathwise_uniqueness_check(const CoefficientSet& coeffs,
                                             const PairSampler& mu0,
                                             int n_particles, double dt,
                                             double t_final, uint64_t seed,
                                             double radius_r = 1.0);

}  // namespace mclab

#endif
