#ifndef MCLAB_MILD_HPP
#define MCLAB_MILD_HPP

#include "mclab/coefficients.hpp"
#include "mclab/grid.hpp"
#include "mclab/report.hpp"
#include "mclab/rng.hpp"

namespace mclab {

struct AliasError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Gaussian semigroup G^gamma_t (variance gamma^2 t) realized spectrally on a
// periodic embedding of [-L, L] with 2x zero padding. Also applies the
// Laplacian-of-kernel operator used by the Duhamel integral.
class HeatKernelOp {
 public:
  HeatKernelOp(double gamma, const GridSpec& grid);
  ~HeatKernelOp();
  HeatKernelOp(const HeatKernelOp&) = delete;
  HeatKernelOp& operator=(const HeatKernelOp&) = delete;

  double gamma() const { return gamma_; }

  // G^gamma_t * f. Throws AliasError when the kernel mass leaking outside the
  // padding margin exceeds 1e-8.
  std::vector<double> convolve(const std::vector<double>& f, double t) const;
  // Lap G^gamma_t * f (spectral multiplier -xi^2 exp(-gamma^2 t xi^2 / 2)).
  std::vector<double> convolve_laplacian(const std::vector<double>& f,
                                         double t) const;

 private:
  struct Impl;
  Impl* impl_;
  double gamma_;
};

// gamma^2 = 1.5 sup_{[0, u_max]} alpha.
double choose_gamma(const DiffusionModel& model, double u_max);

std::vector<double> heat_convolve(const std::vector<double>& f,
                                  const GridSpec& grid, double gamma, double t);

// Duhamel trajectory t -> G_t*u0 + 1/2 int_0^t Lap G_{t-s} * ((sigma^2(u_s)-gamma^2) u_s) ds,
// left-endpoint rule on the dt lattice of u_traj.
PathField mild_map(const PathField& u_traj, const DiffusionModel& model,
                   double gamma, const DensityField& u0);

// ||mild(u1)-mild(u2)|| / ||u1-u2|| in L2((0,T) x grid); 0 when the
// denominator is below 1e-14.
double contraction_factor(const PathField& u1, const PathField& u2,
                          const DiffusionModel& model, double gamma);

// Fourier-symbol bound 2|xi|^2 / sqrt(4 tau^2 + gamma^4 |xi|^4) <= 2/gamma^2,
// plus a randomized operator-norm check on band-limited inputs.
VerificationReport symbol_bound_check(double gamma, int n_tau, int n_xi,
                                      uint64_t seed = 20240801);

}  // namespace mclab

#endif
