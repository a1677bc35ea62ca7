#include "mclab/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <stdexcept>

#include "json.hpp"

#include "mclab/coefficients.hpp"
#include "mclab/estimators.hpp"
#include "mclab/fp_solver.hpp"
#include "mclab/grid.hpp"
#include "mclab/metrics.hpp"
#include "mclab/particle_moderated.hpp"
#include "mclab/rng.hpp"

namespace mclab {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double l1_error_vs_gaussian(const PathField& traj, const GridSpec& grid,
                            double variance) {
  const auto& u = traj.snapshots.back().values;
  double err = 0.0;
  for (int i = 0; i < grid.n_cells; ++i) {
    double x = grid.x(i);
    double exact =
        std::exp(-0.5 * x * x / variance) / std::sqrt(2.0 * M_PI * variance);
    err += std::abs(u[static_cast<size_t>(i)] - exact) * grid.h();
  }
  return err;
}

GridSpec heat_grid(double half_width, double h, double dt, double t_final) {
  GridSpec g;
  g.half_width = half_width;
  g.n_cells = std::max(8, static_cast<int>(std::llround(2.0 * half_width / h)));
  g.n_steps = std::max(1, static_cast<int>(std::llround(t_final / dt)));
  g.dt = t_final / g.n_steps;
  return g;
}

}  // namespace

std::string StudyResult::to_csv() const {
  std::string out = "study,axis,metric,level,seed,value\n";
  for (const auto& r : rows) {
    out += study + "," + axis + "," + metric_name + "," + fmt(r.level) + "," +
           std::to_string(r.seed) + "," + fmt(r.metric) + "\n";
  }
  return out;
}

std::string StudyResult::to_json() const {
  nlohmann::ordered_json j;
  j["study"] = study;
  j["axis"] = axis;
  j["metric"] = metric_name;
  j["levels"] = levels;
  j["medians"] = medians;
  if (slope)
    j["loglog_slope"] = *slope;
  else
    j["loglog_slope"] = nullptr;
  j["monotone_nonincreasing"] = monotone_nonincreasing;
  return j.dump(2);
}

StudyResult run_convergence_study(const std::string& study, const Config& cfg,
                                  const std::vector<double>& levels,
                                  const std::vector<uint64_t>& seeds) {
  if (levels.empty())
    throw std::invalid_argument("run_convergence_study: no levels given");

  StudyResult res;
  res.study = study;
  bool stochastic = false;
  std::function<double(double, uint64_t)> metric;

  double half_width = cfg.get_double_or("grid", "half_width", 8.0);
  double t_final = cfg.get_double_or("study", "t_final", 0.5);

  if (study == "fp_heat_h") {
    res.axis = "h";
    res.metric_name = "l1_error_vs_analytic";
    metric = [=](double h, uint64_t) {
      GridSpec grid = heat_grid(half_width, h, 0.5 * h, t_final);
      auto model = make_constant_model(1.0, 1.0);
      auto u0 = project_initial(gaussian_density(0.0, 0.25), grid);
      auto traj = solve_nonlinear_fp(model, u0, 0.0, grid);
      return l1_error_vs_gaussian(traj, grid, 0.25 + t_final);
    };
  } else if (study == "fp_heat_dt") {
    res.axis = "dt";
    res.metric_name = "l1_error_vs_analytic";
    double h = cfg.get_double_or("grid", "h", 2.0 * half_width / 2048);
    metric = [=](double dt, uint64_t) {
      GridSpec grid = heat_grid(half_width, h, dt, t_final);
      auto model = make_constant_model(1.0, 1.0);
      auto u0 = project_initial(gaussian_density(0.0, 0.25), grid);
      auto traj = solve_nonlinear_fp(model, u0, 0.0, grid);
      return l1_error_vs_gaussian(traj, grid, 0.25 + t_final);
    };
  } else if (study == "eps_stability") {
    res.axis = "eps";
    res.metric_name = "l2_gap_eps_vs_half_eps";
    std::string model_spec =
        cfg.get_or("model", "spec", "sqrt_affine(1,1)");
    double r_max = cfg.get_double_or("model", "r_max", 1.0);
    metric = [=](double eps, uint64_t) {
      GridSpec grid = heat_grid(half_width, 2.0 * half_width / 512, 1e-3,
                                cfg.get_double_or("study", "t_final", 0.25));
      auto model = make_model_from_spec(model_spec, r_max);
      auto u0 = project_initial(gaussian_density(0.0, 0.25), grid);
      auto a = solve_nonlinear_fp(model, u0, eps, grid);
      auto b = solve_nonlinear_fp(model, u0, 0.5 * eps, grid);
      double s = 0.0;
      for (size_t i = 0; i < a.snapshots.back().values.size(); ++i) {
        double d =
            a.snapshots.back().values[i] - b.snapshots.back().values[i];
        s += d * d * grid.h();
      }
      return std::sqrt(s);
    };
  } else if (study == "moderated_n") {
    res.axis = "N";
    res.metric_name = "w1_empirical_vs_fp";
    stochastic = true;
    std::string model_spec = cfg.get_or("model", "spec", "sqrt_affine(1,1)");
    double r_max = cfg.get_double_or("model", "r_max", 1.0);
    double dt = cfg.get_double_or("study", "dt", 1e-3);
    // One FP reference trajectory shared by every (level, seed) cell.
    GridSpec grid = heat_grid(half_width, 2.0 * half_width / 512, dt, t_final);
    auto model = make_model_from_spec(model_spec, r_max);
    auto u0 = project_initial(gaussian_density(0.0, 0.25), grid);
    auto ref = solve_nonlinear_fp(model, u0, 0.0, grid);
    auto ref_density =
        std::make_shared<std::vector<double>>(ref.snapshots.back().values);
    double bw_c = cfg.get_double_or("estimator", "bandwidth_c", 0.6);
    metric = [=](double level, uint64_t seed) {
      int n = static_cast<int>(std::llround(level));
      MollifierSpec spec;
      spec.bandwidth = bw_c * std::pow(static_cast<double>(n), -0.2);
      ModeratedOptions opts;
      opts.snapshot_stride = 1 << 20;  // endpoints only
      auto run = simulate_moderated(model, gaussian_sampler(0.0, 0.5), n, spec,
                                    dt, t_final, seed, opts);
      return wasserstein1_1d_samples_density(
          run.position_snapshots.back(), {}, *ref_density, -half_width,
          grid.h());
    };
  } else if (study == "kde_bandwidth") {
    res.axis = "bandwidth";
    res.metric_name = "l1_error_vs_sampled_density";
    stochastic = true;
    long n_samples = cfg.get_int_or("study", "n_samples", 20000);
    int n_cells = 512;
    double h = 2.0 * half_width / n_cells;
    metric = [=](double bw, uint64_t seed) {
      Rng rng(seed);
      std::vector<double> xs(static_cast<size_t>(n_samples));
      for (long i = 0; i < n_samples; ++i)
        xs[static_cast<size_t>(i)] =
            rng.normal(static_cast<uint64_t>(i), 0, RngChannel::init_x, 0);
      MollifierSpec spec;
      spec.bandwidth = bw;
      auto dens = kde_grid(xs, {}, spec, -half_width, h, n_cells);
      double err = 0.0;
      for (int i = 0; i < n_cells; ++i) {
        double x = -half_width + (i + 0.5) * h;
        double exact = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
        err += std::abs(dens[static_cast<size_t>(i)] - exact) * h;
      }
      return err;
    };
  } else {
    throw std::invalid_argument("run_convergence_study: unknown study " +
                                study);
  }

  std::vector<uint64_t> run_seeds = stochastic ? seeds : std::vector<uint64_t>{0};
  if (stochastic && seeds.size() < 3)
    throw std::invalid_argument(
        "run_convergence_study: stochastic axis needs >= 3 seeds");

  for (double level : levels) {
    std::vector<double> cell;
    for (uint64_t seed : run_seeds) {
      double v;
      try {
        v = metric(level, seed);
      } catch (const std::exception& e) {
        throw std::runtime_error("study " + study + " level " + fmt(level) +
                                 " seed " + std::to_string(seed) + ": " +
                                 e.what());
      }
      res.rows.push_back({level, seed, v});
      cell.push_back(v);
    }
    res.levels.push_back(level);
    res.medians.push_back(median(cell));
  }

  if (res.levels.size() >= 2) {
    res.slope = loglog_slope(res.levels, res.medians);
    res.monotone_nonincreasing = true;
    for (size_t k = 1; k < res.medians.size(); ++k)
      if (res.medians[k] > res.medians[k - 1]) res.monotone_nonincreasing = false;
  }
  return res;
}

}  // namespace mclab
