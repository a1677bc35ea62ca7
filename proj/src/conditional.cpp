#include "mclab/conditional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mclab/metrics.hpp"

namespace mclab {

namespace {

std::function<double(double)> scalar_fn(const std::string& spec, double* sup,
                                        double* lip, double* ellipticity) {
  auto val_of = [&](const std::string& s) {
    return std::stod(s.substr(s.find(':') + 1));
  };
  if (spec.rfind("const:", 0) == 0) {
    double c = val_of(spec);
    *sup = std::abs(c);
    *lip = 0.0;
    if (ellipticity) *ellipticity = c * c;
    return [c](double) { return c; };
  }
  if (spec == "tanh") {
    *sup = 1.0;
    *lip = 1.0;
    if (ellipticity) *ellipticity = 0.0;
    return [](double y) { return std::tanh(y); };
  }
  if (spec == "halfsin") {
    *sup = 0.5;
    *lip = 0.5;
    if (ellipticity) *ellipticity = 0.0;
    return [](double y) { return 0.5 * std::sin(y); };
  }
  if (spec == "identity") {
    *sup = std::numeric_limits<double>::infinity();
    *lip = 1.0;
    if (ellipticity) *ellipticity = 0.0;
    return [](double y) { return y; };
  }
  if (spec == "tanh_affine") {
    // 1 + tanh(y)/2: bounded away from zero, Lipschitz 1/2.
    *sup = 1.5;
    *lip = 0.5;
    if (ellipticity) *ellipticity = 0.25;
    return [](double y) { return 1.0 + 0.5 * std::tanh(y); };
  }
  throw std::runtime_error("unknown scalar coefficient spec: " + spec);
}

}  // namespace

CoefficientSet make_coefficients(const std::string& b_spec,
                                 const std::string& sigma_spec,
                                 const std::string& ell_spec,
                                 const std::string& gamma_spec) {
  CoefficientSet c;
  double sup_sigma = 0.0, lip_sigma = 0.0;
  c.sigma = scalar_fn(sigma_spec, &sup_sigma, &lip_sigma, &c.ellipticity_sigma);
  c.ell = scalar_fn(ell_spec, &c.sup_ell, &c.lip_ell, nullptr);
  c.gamma = scalar_fn(gamma_spec, &c.sup_gamma, &c.lip_gamma,
                      &c.ellipticity_gamma);

  double sup_b = 0.0;
  if (b_spec == "zero") {
    c.b = [](double, double) { return 0.0; };
    c.b_zero = true;
    c.b_autonomous = true;
  } else if (b_spec == "tanh") {
    c.b = [](double x, double) { return std::tanh(x); };
    c.b_autonomous = true;
    sup_b = 1.0;
  } else if (b_spec == "tanh_y") {
    c.b = [](double, double y) { return std::tanh(y); };
    sup_b = 1.0;
  } else {
    throw std::runtime_error("unknown drift spec: " + b_spec);
  }
  double min_sigma = std::sqrt(std::max(c.ellipticity_sigma, 1e-16));
  c.sup_sigma_inv_b = sup_b / min_sigma;
  c.name = b_spec + "/" + sigma_spec + "/" + ell_spec + "/" + gamma_spec;
  return c;
}

VerificationReport spot_check_ellipticity(const CoefficientSet& coeffs,
                                          uint64_t seed, int n_samples) {
  Rng rng(seed);
  double min_sigma_sq = std::numeric_limits<double>::infinity();
  double min_gamma_sq = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_samples; ++i) {
    double x = 8.0 * (rng.uniform(i, 0, RngChannel::scratch, 0) - 0.5);
    double y = 8.0 * (rng.uniform(i, 0, RngChannel::scratch, 1) - 0.5);
    double s = coeffs.sigma(x);
    double g = coeffs.gamma(y);
    min_sigma_sq = std::min(min_sigma_sq, s * s);
    min_gamma_sq = std::min(min_gamma_sq, g * g);
  }
  VerificationReport rep;
  rep.title = "ellipticity spot checks: " + coeffs.name;
  rep.add(Check::one_sided("sigma_ellipticity_h3", coeffs.ellipticity_sigma,
                           min_sigma_sq, 1e-12, "hypo:weak (H3)"));
  rep.add(Check::one_sided("gamma_ellipticity_h6", coeffs.ellipticity_gamma,
                           min_gamma_sq, 1e-12, "hypo:weak (H6)"));
  return rep;
}

PairSampler independent_gaussian_pair(double mx, double sx, double my,
                                      double sy) {
  return [=](const Rng& rng, uint64_t particle) {
    double x = mx + sx * rng.normal(particle, 0, RngChannel::init_x, 0);
    double y = my + sy * rng.normal(particle, 0, RngChannel::init_y, 0);
    return std::pair<double, double>{x, y};
  };
}

namespace {

// Conditional estimate of precomputed m-values at every particle position.
// Binned: direct lookup. NW: evaluated on a query lattice then interpolated.
struct ParticleEstimate {
  std::vector<double> values;
  long degenerate = 0;
};

ParticleEstimate conditional_at_particles(const std::vector<double>& xs,
                                          const std::vector<double>& mvals,
                                          const std::vector<double>& weights,
                                          const EstimatorConfig& cfg) {
  size_t n = xs.size();
  auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi - lo < 1e-12) {
    // All X equal: the estimate is the plain weighted mean everywhere.
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double w = weights.empty() ? 1.0 : weights[i];
      num += w * mvals[i];
      den += w;
    }
    ParticleEstimate est;
    est.values.assign(n, den > 0 ? num / den : 0.0);
    return est;
  }

  ParticleEstimate est;
  est.values.resize(n);
  if (cfg.type == EstimatorConfig::Type::binned) {
    int nb = cfg.n_bins;
    double width = (hi - lo) / nb;
    std::vector<double> num(nb, 0.0), den(nb, 0.0);
    std::vector<int> bin(n);
    for (size_t i = 0; i < n; ++i) {
      long b = std::clamp<long>(
          static_cast<long>(std::floor((xs[i] - lo) / width)), 0, nb - 1);
      bin[i] = static_cast<int>(b);
      double w = weights.empty() ? 1.0 : weights[i];
      num[b] += w * mvals[i];
      den[b] += w;
    }
    std::vector<double> val(nb, 0.0);
    for (int b = 0; b < nb; ++b) {
      if (den[b] > 0.0) {
        val[b] = num[b] / den[b];
      } else {
        ++est.degenerate;
        // nearest nonempty neighbor
        for (int off = 1; off < nb; ++off) {
          if (b - off >= 0 && den[b - off] > 0.0) {
            val[b] = num[b - off] / den[b - off];
            break;
          }
          if (b + off < nb && den[b + off] > 0.0) {
            val[b] = num[b + off] / den[b + off];
            break;
          }
        }
      }
    }
    for (size_t i = 0; i < n; ++i) est.values[i] = val[bin[i]];
  } else {
    int nq = cfg.nw_query_points;
    double bw = cfg.bandwidth > 0.0 ? cfg.bandwidth : default_bandwidth(xs);
    double qh = (hi - lo) / (nq - 1);
    std::vector<double> qval(nq, 0.0);
    std::vector<double> qnum(nq, 0.0), qden(nq, 0.0);
    // Each sample touches only queries within 6 bandwidths.
    int reach = std::max(1, static_cast<int>(std::ceil(6.0 * bw / qh)));
    for (size_t i = 0; i < n; ++i) {
      double w = weights.empty() ? 1.0 : weights[i];
      int qc = static_cast<int>(std::round((xs[i] - lo) / qh));
      int q0 = std::max(0, qc - reach), q1 = std::min(nq - 1, qc + reach);
      for (int q = q0; q <= q1; ++q) {
        double z = (lo + q * qh - xs[i]) / bw;
        double k = std::exp(-0.5 * z * z);
        qnum[q] += w * k * mvals[i];
        qden[q] += w * k;
      }
    }
    for (int q = 0; q < nq; ++q) {
      if (qden[q] < 1e-300) {
        qval[q] = 0.0;
        ++est.degenerate;
      } else {
        qval[q] = qnum[q] / qden[q];
      }
    }
    for (size_t i = 0; i < n; ++i) {
      double pos = (xs[i] - lo) / qh;
      int q = std::clamp(static_cast<int>(std::floor(pos)), 0, nq - 2);
      double frac = pos - q;
      est.values[i] = qval[q] * (1.0 - frac) + qval[q + 1] * frac;
    }
  }
  return est;
}

double sigma_inv_b(const CoefficientSet& coeffs, double x, double y) {
  double s = coeffs.sigma(x);
  if (std::abs(s) < 1e-8)
    throw ConditionGuard("sigma near-singular at evaluation point");
  return coeffs.b(x, y) / s;
}

}  // namespace

ConditionalRun simulate_conditional(const CoefficientSet& coeffs,
                                    const PairSampler& mu0, int n_particles,
                                    const EstimatorConfig& est, double dt,
                                    double t_final, uint64_t seed,
                                    const ConditionalOptions& opts) {
  if (n_particles < 100)
    throw std::invalid_argument("simulate_conditional: need N >= 100");
  int n_steps = static_cast<int>(std::llround(t_final / dt));
  Rng rng(seed);
  std::vector<double> x(n_particles), y(n_particles);
  for (int i = 0; i < n_particles; ++i) {
    auto [xi, yi] = mu0(rng, i);
    x[i] = xi;
    y[i] = yi;
  }

  ConditionalRun run;
  run.seed = seed;
  run.dt = dt;
  run.n_steps = n_steps;
  double sqdt = std::sqrt(dt);
  double ell_cap = coeffs.sup_ell * (1.0 + 1e-12);
  double gam_cap = coeffs.sup_gamma * (1.0 + 1e-12);

  auto record = [&](int step) {
    if (step % opts.snapshot_stride == 0 || step == n_steps) {
      run.x_snaps.push_back(x);
      run.y_snaps.push_back(y);
      run.snap_times.push_back(step * dt);
    }
    if (opts.store_full_paths) {
      run.x_path.push_back(x);
      run.y_path.push_back(y);
    }
  };
  record(0);

  std::vector<double> mell(n_particles), mgam(n_particles);
  for (int step = 0; step < n_steps; ++step) {
    for (int i = 0; i < n_particles; ++i) {
      mell[i] = coeffs.ell(y[i]);
      mgam[i] = coeffs.gamma(y[i]);
    }
    auto lam = conditional_at_particles(x, mell, {}, est);
    auto gam = conditional_at_particles(x, mgam, {}, est);
    run.degenerate_queries += lam.degenerate + gam.degenerate;
    for (int i = 0; i < n_particles; ++i) {
      if (std::abs(lam.values[i]) > ell_cap ||
          std::abs(gam.values[i]) > gam_cap)
        ++run.bound_violations;
      double xi_b = rng.normal(i, step + 1, RngChannel::brownian_b, 0);
      double xi_w = rng.normal(i, step + 1, RngChannel::brownian_w, 0);
      double x_new = x[i] + coeffs.b(x[i], y[i]) * dt +
                     coeffs.sigma(x[i]) * sqdt * xi_b;
      y[i] += lam.values[i] * dt + gam.values[i] * sqdt * xi_w;
      x[i] = x_new;
    }
    record(step + 1);
  }
  return run;
}

ConditionalRun simulate_girsanov_q(const CoefficientSet& coeffs,
                                   const PairSampler& mu0, int n_particles,
                                   const EstimatorConfig& est, double dt,
                                   double t_final, uint64_t seed,
                                   const ConditionalOptions& opts) {
  if (n_particles < 100)
    throw std::invalid_argument("simulate_girsanov_q: need N >= 100");
  int n_steps = static_cast<int>(std::llround(t_final / dt));
  Rng rng(seed);
  std::vector<double> x(n_particles), y(n_particles), logz(n_particles, 0.0);
  for (int i = 0; i < n_particles; ++i) {
    auto [xi, yi] = mu0(rng, i);
    x[i] = xi;
    y[i] = yi;
  }

  ConditionalRun run;
  run.seed = seed;
  run.dt = dt;
  run.n_steps = n_steps;
  run.is_q_run = true;
  double sqdt = std::sqrt(dt);
  double ell_cap = coeffs.sup_ell * (1.0 + 1e-12);
  double gam_cap = coeffs.sup_gamma * (1.0 + 1e-12);

  auto record = [&](int step) {
    if (step % opts.snapshot_stride == 0 || step == n_steps) {
      run.x_snaps.push_back(x);
      run.y_snaps.push_back(y);
      std::vector<double> z(n_particles);
      for (int i = 0; i < n_particles; ++i) z[i] = std::exp(logz[i]);
      run.z_snaps.push_back(std::move(z));
      run.snap_times.push_back(step * dt);
    }
    if (opts.store_full_paths) {
      run.x_path.push_back(x);
      run.y_path.push_back(y);
    }
  };
  record(0);

  std::vector<double> mell(n_particles), mgam(n_particles), w(n_particles);
  for (int step = 0; step < n_steps; ++step) {
    // Z^-1 weights, normalized around the mean log-weight; the estimators are
    // invariant under a common positive factor.
    double mean_logz =
        std::accumulate(logz.begin(), logz.end(), 0.0) / n_particles;
    for (int i = 0; i < n_particles; ++i) {
      w[i] = std::exp(-(logz[i] - mean_logz));
      mell[i] = coeffs.ell(y[i]);
      mgam[i] = coeffs.gamma(y[i]);
    }
    auto lam = conditional_at_particles(x, mell, w, est);
    auto gam = conditional_at_particles(x, mgam, w, est);
    run.degenerate_queries += lam.degenerate + gam.degenerate;
    for (int i = 0; i < n_particles; ++i) {
      if (std::abs(lam.values[i]) > ell_cap ||
          std::abs(gam.values[i]) > gam_cap)
        ++run.bound_violations;
      double xi_b = rng.normal(i, step + 1, RngChannel::brownian_b, 0);
      double xi_w = rng.normal(i, step + 1, RngChannel::brownian_w, 0);
      double db = sqdt * xi_b;
      double theta = sigma_inv_b(coeffs, x[i], y[i]);
      logz[i] += -theta * db + 0.5 * theta * theta * dt;
      if (std::abs(logz[i]) > 700.0)
        throw OverflowGuard("girsanov weight overflow at particle " +
                            std::to_string(i));
      x[i] += coeffs.sigma(x[i]) * db;
      y[i] += lam.values[i] * dt + gam.values[i] * sqdt * xi_w;
    }
    record(step + 1);
  }
  return run;
}

std::vector<std::vector<double>> girsanov_weights(const ConditionalRun& q_run,
                                                  const CoefficientSet& coeffs) {
  if (q_run.x_path.empty())
    throw std::invalid_argument("girsanov_weights: run lacks full paths");
  Rng rng(q_run.seed);
  size_t n = q_run.x_path.front().size();
  double sqdt = std::sqrt(q_run.dt);
  std::vector<std::vector<double>> z(q_run.x_path.size(),
                                     std::vector<double>(n, 1.0));
  std::vector<double> logz(n, 0.0);
  for (int step = 0; step < q_run.n_steps; ++step) {
    const auto& xs = q_run.x_path[static_cast<size_t>(step)];
    const auto& ys = q_run.y_path[static_cast<size_t>(step)];
    for (size_t i = 0; i < n; ++i) {
      double db = sqdt * rng.normal(i, step + 1, RngChannel::brownian_b, 0);
      double theta = sigma_inv_b(coeffs, xs[i], ys[i]);
      logz[i] += -theta * db + 0.5 * theta * theta * q_run.dt;
      if (std::abs(logz[i]) > 700.0)
        throw OverflowGuard("girsanov weight overflow at particle " +
                            std::to_string(i));
      z[static_cast<size_t>(step) + 1][i] = std::exp(logz[i]);
    }
  }
  return z;
}

PicardResult picard_iterate(const CoefficientSet& coeffs, const PairSampler& mu0,
                            int n_particles, const PathNormSpec& norm,
                            int n_iterations, uint64_t seed,
                            const EstimatorConfig& est) {
  if (!coeffs.b_autonomous)
    throw std::invalid_argument(
        "picard_iterate: X-dynamics must be autonomous (b zero or b(x))");
  if (n_iterations < 1)
    throw std::invalid_argument("picard_iterate: need K >= 1");
  int n_steps = static_cast<int>(std::llround(norm.t_final / norm.dt));
  double dt = norm.dt, sqdt = std::sqrt(dt);
  Rng rng(seed);
  int k_levels = n_iterations + 1;  // zeta^0 .. zeta^K in lockstep

  std::vector<double> x(n_particles);
  std::vector<std::vector<double>> zeta(
      k_levels, std::vector<double>(n_particles, 0.0));
  for (int i = 0; i < n_particles; ++i) {
    auto [xi, yi] = mu0(rng, i);
    x[i] = xi;
    for (int k = 0; k < k_levels; ++k) zeta[k][i] = yi;
  }

  std::vector<double> acc(n_iterations, 0.0);       // trapezoid accumulators
  std::vector<double> prev_term(n_iterations, 0.0); // e^{-ct} mean diff^2
  std::vector<double> mvals(n_particles);
  std::vector<std::vector<double>> lam(n_iterations), gam(n_iterations);

  for (int step = 0; step <= n_steps; ++step) {
    double t = step * dt;
    double decay = std::exp(-norm.c * t);
    for (int k = 0; k < n_iterations; ++k) {
      double meansq = 0.0;
      for (int i = 0; i < n_particles; ++i) {
        double d = zeta[k + 1][i] - zeta[k][i];
        meansq += d * d;
      }
      double term = decay * meansq / n_particles;
      if (step > 0) acc[k] += 0.5 * dt * (prev_term[k] + term);
      prev_term[k] = term;
    }
    if (step == n_steps) break;

    // Estimates for every iterate from the state at time t, before any update.
    for (int k = 0; k < n_iterations; ++k) {
      for (int i = 0; i < n_particles; ++i) mvals[i] = coeffs.ell(zeta[k][i]);
      lam[k] = conditional_at_particles(x, mvals, {}, est).values;
      for (int i = 0; i < n_particles; ++i) mvals[i] = coeffs.gamma(zeta[k][i]);
      gam[k] = conditional_at_particles(x, mvals, {}, est).values;
    }
    for (int i = 0; i < n_particles; ++i) {
      double xi_b = rng.normal(i, step + 1, RngChannel::brownian_b, 0);
      double xi_w = rng.normal(i, step + 1, RngChannel::brownian_w, 0);
      for (int k = 0; k < n_iterations; ++k)
        zeta[k + 1][i] += lam[k][i] * dt + gam[k][i] * sqdt * xi_w;
      x[i] += coeffs.b(x[i], 0.0) * dt + coeffs.sigma(x[i]) * sqdt * xi_b;
    }
  }

  PicardResult res;
  res.distances.resize(n_iterations);
  for (int k = 0; k < n_iterations; ++k) res.distances[k] = std::sqrt(acc[k]);

  int rises = 0;
  size_t fit_end = res.distances.size();
  for (size_t k = 1; k < res.distances.size(); ++k) {
    if (res.distances[k] >= res.distances[k - 1]) {
      if (fit_end == res.distances.size()) fit_end = k;
      if (++rises >= 3) res.no_contraction = true;
    } else {
      rises = 0;
    }
  }
  if (fit_end >= 2) {
    std::vector<double> ks(fit_end), ds(fit_end);
    for (size_t k = 0; k < fit_end; ++k) {
      ks[k] = std::exp(static_cast<double>(k + 1));  // log(ks) = k+1
      ds[k] = res.distances[k];
    }
    res.geometric_ratio = std::exp(loglog_slope(ks, ds));
  } else if (!res.distances.empty()) {
    res.geometric_ratio = 1.0;
  }
  return res;
}

namespace {

// Weighted NW values with multiplier-bootstrap standard errors.
struct NwWithSe {
  std::vector<double> values, se, mass;
};

NwWithSe nw_with_bootstrap(const std::vector<double>& xs,
                           const std::vector<double>& mvals,
                           const std::vector<double>& weights, double bw,
                           const std::vector<double>& queries, const Rng& rng,
                           int n_boot) {
  size_t n = xs.size(), nq = queries.size();
  NwWithSe out;
  out.values.assign(nq, 0.0);
  out.se.assign(nq, 0.0);
  out.mass.assign(nq, 0.0);
  for (size_t q = 0; q < nq; ++q) {
    double num = 0.0, den = 0.0;
    std::vector<double> bnum(n_boot, 0.0), bden(n_boot, 0.0);
    for (size_t i = 0; i < n; ++i) {
      double z = (queries[q] - xs[i]) / bw;
      if (std::abs(z) > 8.0) continue;
      double k = std::exp(-0.5 * z * z) * (weights.empty() ? 1.0 : weights[i]);
      num += k * mvals[i];
      den += k;
      for (int b = 0; b < n_boot; ++b) {
        // Exponential multiplier bootstrap weight.
        double e = -std::log(rng.uniform(i, q, RngChannel::scratch,
                                         static_cast<uint32_t>(b)));
        bnum[b] += e * k * mvals[i];
        bden[b] += e * k;
      }
    }
    out.mass[q] = den;
    out.values[q] = den > 1e-300 ? num / den : 0.0;
    double mean = 0.0, var = 0.0;
    std::vector<double> reps(n_boot);
    for (int b = 0; b < n_boot; ++b) {
      reps[b] = bden[b] > 1e-300 ? bnum[b] / bden[b] : 0.0;
      mean += reps[b];
    }
    mean /= n_boot;
    for (int b = 0; b < n_boot; ++b) var += (reps[b] - mean) * (reps[b] - mean);
    out.se[q] = std::sqrt(var / std::max(1, n_boot - 1));
  }
  return out;
}

double quantile_of(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  size_t idx = static_cast<size_t>(p * static_cast<double>(v.size() - 1));
  return v[idx];
}

}  // namespace

VerificationReport weighted_conditional_check(
    const ConditionalRun& p_run, const ConditionalRun& q_run,
    const std::function<double(double, double)>& theta,
    const EstimatorConfig& est, uint64_t seed) {
  const auto& xp = p_run.x_snaps.back();
  const auto& yp = p_run.y_snaps.back();
  const auto& xq = q_run.x_snaps.back();
  const auto& yq = q_run.y_snaps.back();
  const auto& zq = q_run.z_snaps.back();
  size_t np = xp.size(), nq_n = xq.size();

  std::vector<double> mp(np), mq(nq_n), wq(nq_n);
  for (size_t i = 0; i < np; ++i) mp[i] = theta(xp[i], yp[i]);
  for (size_t i = 0; i < nq_n; ++i) {
    mq[i] = theta(xq[i], yq[i]);
    wq[i] = 1.0 / zq[i];
  }

  // Shared query grid across the adequate-mass central region of the P-run.
  double lo = quantile_of(xp, 0.05), hi = quantile_of(xp, 0.95);
  int n_queries = 17;
  std::vector<double> queries(n_queries);
  for (int q = 0; q < n_queries; ++q)
    queries[q] = lo + (hi - lo) * q / (n_queries - 1);

  double bw = est.bandwidth > 0.0 ? est.bandwidth : default_bandwidth(xp);
  Rng rng(seed);
  auto side_p = nw_with_bootstrap(xp, mp, {}, bw, queries, rng, 40);
  auto side_q = nw_with_bootstrap(xq, mq, wq, bw, queries, rng, 40);

  VerificationReport rep;
  rep.title = "girsanov weighted conditional identity";
  double worst = 0.0, worst_se = 1.0;
  for (int q = 0; q < n_queries; ++q) {
    double diff = std::abs(side_p.values[q] - side_q.values[q]);
    double se = std::sqrt(side_p.se[q] * side_p.se[q] +
                          side_q.se[q] * side_q.se[q]);
    if (diff / std::max(se, 1e-300) > worst / worst_se) {
      worst = diff;
      worst_se = se;
    }
  }
  Check c = Check::residual_check("p_vs_weighted_q_conditional_worst", worst,
                                  3.0, worst_se, "eq:WeightedConditionalExpect");
  c.standard_error = worst_se;
  rep.add(std::move(c));
  return rep;
}

VerificationReport exp_mart_bound_check(const ConditionalRun& q_run,
                                        const CoefficientSet& coeffs,
                                        uint64_t seed) {
  VerificationReport rep;
  rep.title = "exponential martingale checks";
  double t_final = q_run.snap_times.back();
  double sup_theta = coeffs.sup_sigma_inv_b;
  double bound_sq = std::exp(3.0 * t_final * sup_theta * sup_theta);
  double bound_alt = std::exp(3.0 * t_final * sup_theta);
  Rng rng(seed);

  double max_stat = 0.0, max_stat_se = 0.0;
  for (size_t snap = 0; snap < q_run.snap_times.size(); ++snap) {
    const auto& z = q_run.z_snaps[snap];
    const auto& xs = q_run.x_snaps[snap];
    size_t n = z.size();
    // Martingale normalization: Z^-1 is the Q-martingale dP/dQ, mean 1.
    double mean = 0.0;
    for (double v : z) mean += 1.0 / v;
    mean /= n;
    double var = 0.0;
    for (double v : z) var += (1.0 / v - mean) * (1.0 / v - mean);
    double se = std::sqrt(var / (n * std::max<size_t>(1, n - 1)));
    Check c = Check::residual_check(
        "mean_zinv_minus_one_t=" + std::to_string(q_run.snap_times[snap]),
        mean - 1.0, 3.0, std::max(se, 1e-300), "eq:TransformedNonlinear");
    c.standard_error = se;
    rep.add(std::move(c));
    if (snap == 0) continue;

    // Conditional second-moment statistic on the adequate-mass region.
    std::vector<double> z2(n);
    for (size_t i = 0; i < n; ++i) z2[i] = z[i] * z[i];
    std::vector<double> xs_copy = xs;
    double lo = quantile_of(xs_copy, 0.05), hi = quantile_of(xs_copy, 0.95);
    int n_queries = 33;
    std::vector<double> queries(n_queries);
    for (int q = 0; q < n_queries; ++q)
      queries[q] = lo + (hi - lo) * q / (n_queries - 1);
    double bw = default_bandwidth(xs);
    auto nw = nw_with_bootstrap(xs, z2, {}, bw, queries, rng, 30);
    double qh = (hi - lo) / (n_queries - 1);
    for (size_t i = 0; i < n; ++i) {
      if (xs[i] < lo || xs[i] > hi) continue;
      double pos = (xs[i] - lo) / qh;
      int q = std::clamp(static_cast<int>(std::floor(pos)), 0, n_queries - 2);
      double frac = pos - q;
      double cond = nw.values[q] * (1.0 - frac) + nw.values[q + 1] * frac;
      double se_q = nw.se[q] * (1.0 - frac) + nw.se[q + 1] * frac;
      double stat = cond / z2[i];
      if (stat > max_stat) {
        max_stat = stat;
        max_stat_se = se_q / z2[i];
      }
    }
  }
  double slack = 3.0 * max_stat_se / std::max(bound_sq, 1e-300);
  rep.add(Check::one_sided("cond_second_moment_max_vs_sq_exponent", max_stat,
                           bound_sq, slack, "lem:ExpMartPrelim (i)"));
  // The alternative exponent form is recorded without being asserted.
  rep.add(Check::one_sided("alt_exponent_bound_recorded", bound_alt, bound_alt,
                           0.0, "lem:ExpMartPrelim (i), alternative reading"));
  return rep;
}

VerificationReport pathwise_uniqueness_check(const CoefficientSet& coeffs,
                                             const PairSampler& mu0,
                                             int n_particles, double dt,
                                             double t_final, uint64_t seed,
                                             double radius_r) {
  auto gap_at = [&](int n, double bw_scale, uint64_t s) {
    EstimatorConfig nw_cfg;
    nw_cfg.type = EstimatorConfig::Type::nw;
    nw_cfg.bandwidth = bw_scale;
    EstimatorConfig bin_cfg;
    bin_cfg.type = EstimatorConfig::Type::binned;
    bin_cfg.n_bins = std::max(8, static_cast<int>(8.0 / bw_scale));
    ConditionalOptions opts;
    opts.snapshot_stride = 5;
    auto run_a = simulate_conditional(coeffs, mu0, n, nw_cfg, dt, t_final, s, opts);
    auto run_b = simulate_conditional(coeffs, mu0, n, bin_cfg, dt, t_final, s, opts);
    double worst = 0.0;
    for (size_t k = 0; k < run_a.y_snaps.size(); ++k) {
      double mean_gap = 0.0;
      for (size_t i = 0; i < run_a.y_snaps[k].size(); ++i)
        mean_gap += std::abs(run_a.y_snaps[k][i] - run_b.y_snaps[k][i]);
      worst = std::max(worst, mean_gap / static_cast<double>(n));
    }
    return worst;
  };

  double base_bw = 0.25;
  std::vector<double> level1, level2;
  for (uint64_t s = 0; s < 3; ++s) {
    level1.push_back(gap_at(n_particles, base_bw, seed + s));
    level2.push_back(
        gap_at(4 * n_particles, base_bw * std::pow(4.0, -0.2), seed + s));
  }
  auto median3 = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[1];
  };
  double g1 = median3(level1), g2 = median3(level2);

  VerificationReport rep;
  rep.title = "pathwise uniqueness refinement study";
  rep.add(Check::one_sided("estimator_gap_refined_vs_base", g2, g1, 0.0,
                           "thm:wellposedNonlinearLangevin"));

  // Density positivity on [-R, R] at the final time (Aronson lower bound
  // conclusion, checked empirically).
  EstimatorConfig cfg;
  auto run = simulate_conditional(coeffs, mu0, n_particles, cfg, dt, t_final,
                                  seed, {});
  MollifierSpec ms;
  ms.bandwidth = default_bandwidth(run.x_snaps.back());
  std::vector<double> grid_q;
  for (int i = 0; i <= 32; ++i)
    grid_q.push_back(-radius_r + 2.0 * radius_r * i / 32.0);
  auto dens = kde(run.x_snaps.back(), {}, ms, grid_q);
  double inf_rho = *std::min_element(dens.begin(), dens.end());
  Check pos = Check::one_sided("density_lower_bound_neg_inf_rho", -inf_rho, 0.0,
                               0.0, "eq:lowerboundconditional");
  rep.add(std::move(pos));
  return rep;
}

}  // namespace mclab
