#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mclab/acceptance.hpp"
#include "mclab/coefficients.hpp"
#include "mclab/conditional.hpp"
#include "mclab/config.hpp"
#include "mclab/convergence.hpp"
#include "mclab/estimators.hpp"
#include "mclab/fp_solver.hpp"
#include "mclab/grid.hpp"
#include "mclab/metrics.hpp"
#include "mclab/mild.hpp"
#include "mclab/particle_moderated.hpp"

namespace {

using namespace mclab;

struct GlobalOpts {
  uint64_t seed = 20240801;
  int threads = 1;             // accepted for interface parity; runs are
                               // single-threaded and thread-count independent
  bool strict_deterministic = false;  // omit wall-clock fields from artifacts
  std::string out_dir;
};

std::filesystem::path output_root(const GlobalOpts& g) {
  if (!g.out_dir.empty()) return g.out_dir;
  if (const char* env = std::getenv("MCLAB_OUTPUT_ROOT")) return env;
  return ".";
}

void write_file(const std::filesystem::path& root, const std::string& name,
                const std::string& content) {
  std::filesystem::create_directories(root);
  std::ofstream out(root / name, std::ios::binary);
  out << content;
  std::cout << "wrote " << (root / name).string() << "\n";
}

GridSpec grid_from(double half_width, int cells, double dt, double t_final) {
  GridSpec g;
  g.half_width = half_width;
  g.n_cells = cells;
  g.n_steps = std::max(1, static_cast<int>(std::llround(t_final / dt)));
  g.dt = t_final / g.n_steps;
  g.validate();
  return g;
}

std::string density_csv(const DensityField& u, const GridSpec& grid) {
  std::ostringstream out;
  out << "x,u\n";
  char buf[64];
  for (int i = 0; i < grid.n_cells; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", grid.x(i),
                  u.values[static_cast<size_t>(i)]);
    out << buf;
  }
  return out.str();
}

int report_exit(const VerificationReport& rep) {
  std::cout << rep.summary();
  return rep.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for singular McKean SDE systems"};
  app.require_subcommand(1);
  GlobalOpts g;
  app.add_option("--seed", g.seed, "base RNG seed");
  app.add_option("--threads", g.threads, "worker-thread hint");
  app.add_flag("--strict-deterministic", g.strict_deterministic,
               "omit wall-clock fields from written artifacts");
  app.add_option("--out", g.out_dir, "output directory (default $MCLAB_OUTPUT_ROOT or .)");

  // fp-solve
  auto* fp = app.add_subcommand("fp-solve", "finite-volume Fokker-Planck march");
  std::string fp_model = "sqrt_affine(1,1)", fp_u0 = "gaussian(0,0.25)";
  double fp_eps = 0.01, fp_L = 8.0, fp_dt = 1e-3, fp_T = 0.5, fp_rmax = 1.0;
  int fp_cells = 512;
  fp->add_option("--model", fp_model, "diffusion spec, e.g. constant(1), pme(2), csv:path");
  fp->add_option("--u0", fp_u0, "initial density spec");
  fp->add_option("--eps", fp_eps, "ellipticity lift");
  fp->add_option("--half-width", fp_L);
  fp->add_option("--cells", fp_cells);
  fp->add_option("--dt", fp_dt);
  fp->add_option("--t-final", fp_T);
  fp->add_option("--r-max", fp_rmax);

  // particles-moderated
  auto* pm = app.add_subcommand("particles-moderated", "moderated particle system");
  std::string pm_model = "sqrt_affine(1,1)";
  int pm_n = 10000, pm_stride = 25;
  double pm_bw = 0.0, pm_dt = 1e-3, pm_T = 0.5;
  bool pm_lag = false;
  pm->add_option("--model", pm_model);
  pm->add_option("-N,--particles", pm_n);
  pm->add_option("--bandwidth", pm_bw, "0 => N^{-1/5} default");
  pm->add_option("--dt", pm_dt);
  pm->add_option("--t-final", pm_T);
  pm->add_option("--stride", pm_stride, "snapshot stride in steps");
  pm->add_flag("--lag-kde", pm_lag, "reuse previous-step density (biased, faster)");

  // verify-mild
  auto* vm = app.add_subcommand("verify-mild", "symbol bound and contraction factor");
  double vm_umax = 1.0;
  std::string vm_model = "sqrt_affine(1,1)";
  vm->add_option("--model", vm_model);
  vm->add_option("--u-max", vm_umax);

  // conditional
  auto* cd = app.add_subcommand("conditional", "coupled conditional McKean system");
  std::string cd_b = "zero", cd_sigma = "const:1", cd_ell = "tanh",
              cd_gamma = "tanh_affine", cd_est = "binned";
  int cd_n = 10000;
  double cd_dt = 1e-3, cd_T = 0.5;
  cd->add_option("--b", cd_b);
  cd->add_option("--sigma", cd_sigma);
  cd->add_option("--ell", cd_ell);
  cd->add_option("--gamma", cd_gamma);
  cd->add_option("--estimator", cd_est)->check(CLI::IsMember({"binned", "nw"}));
  cd->add_option("-N,--particles", cd_n);
  cd->add_option("--dt", cd_dt);
  cd->add_option("--t-final", cd_T);

  // picard
  auto* pc = app.add_subcommand("picard", "frozen-noise Picard iteration");
  std::string pc_ell = "halfsin", pc_gamma = "identity", pc_sigma = "const:1";
  int pc_n = 20000, pc_k = 8;
  double pc_dt = 1e-3, pc_T = 1.0;
  pc->add_option("--sigma", pc_sigma);
  pc->add_option("--ell", pc_ell);
  pc->add_option("--gamma", pc_gamma);
  pc->add_option("-N,--particles", pc_n);
  pc->add_option("-K,--iterations", pc_k);
  pc->add_option("--dt", pc_dt);
  pc->add_option("--t-final", pc_T);

  // girsanov-check
  auto* gc = app.add_subcommand("girsanov-check", "P-run vs weighted Q-run identities");
  std::string gc_b = "tanh", gc_sigma = "const:1", gc_ell = "tanh",
              gc_gamma = "tanh_affine";
  int gc_n = 20000;
  double gc_dt = 1e-3, gc_T = 0.5;
  gc->add_option("--b", gc_b);
  gc->add_option("--sigma", gc_sigma);
  gc->add_option("--ell", gc_ell);
  gc->add_option("--gamma", gc_gamma);
  gc->add_option("-N,--particles", gc_n);
  gc->add_option("--dt", gc_dt);
  gc->add_option("--t-final", gc_T);

  // convergence-study
  auto* cs = app.add_subcommand("convergence-study", "level/seed sweep with slope fit");
  std::string cs_study = "fp_heat_h", cs_config;
  std::vector<double> cs_levels;
  int cs_seeds = 3;
  cs->add_option("--study", cs_study,
                 "fp_heat_h | fp_heat_dt | eps_stability | moderated_n | kde_bandwidth");
  cs->add_option("--levels", cs_levels)->expected(-1);
  cs->add_option("--n-seeds", cs_seeds);
  cs->add_option("--config", cs_config, "config file with overrides");

  // selftest
  auto* st = app.add_subcommand("selftest", "full acceptance suite");
  bool st_quick = false;
  st->add_flag("--quick", st_quick, "reduced sizes (smoke run)");

  CLI11_PARSE(app, argc, argv);
  auto root = output_root(g);

  try {
    if (fp->parsed()) {
      auto model = make_model_from_spec(fp_model, fp_rmax);
      auto grid = grid_from(fp_L, fp_cells, fp_dt, fp_T);
      auto u0 = project_initial(density_from_spec(fp_u0), grid);
      auto traj = solve_nonlinear_fp(model, u0, fp_eps, grid);
      auto rep = energy_report(traj, model, fp_eps);
      write_file(root, "fp_final_density.csv",
                 density_csv(traj.snapshots.back(), grid));
      write_file(root, "fp_report.json", rep.to_json());
      return report_exit(rep);
    }

    if (pm->parsed()) {
      auto model = make_model_from_spec(pm_model, 1.0);
      MollifierSpec spec;
      spec.bandwidth = pm_bw > 0.0
                           ? pm_bw
                           : 0.6 * std::pow(static_cast<double>(pm_n), -0.2);
      ModeratedOptions opts;
      opts.snapshot_stride = pm_stride;
      opts.lag_kde = pm_lag;
      auto run = simulate_moderated(model, gaussian_sampler(0.0, 0.5), pm_n,
                                    spec, pm_dt, pm_T, g.seed, opts);
      std::ostringstream csv;
      csv << "particle,x\n";
      char buf[64];
      const auto& fin = run.position_snapshots.back();
      for (size_t i = 0; i < fin.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, fin[i]);
        csv << buf;
      }
      write_file(root, "particles_final.csv", csv.str());
      if (!run.kde_path.snapshots.empty())
        write_file(root, "particles_kde.csv",
                   density_csv(run.kde_path.snapshots.back(),
                               run.kde_grid_spec));
      int last = static_cast<int>(run.snapshot_times.size()) - 1;
      auto rep = martingale_residual(
          run, model, {linear_test_fn(), bump_test_fn(0.0, 3.0)},
          {{0, last}, {last / 2, last}});
      write_file(root, "particles_report.json", rep.to_json());
      std::cout << "clamp_count=" << run.clamp_count << "\n";
      return report_exit(rep);
    }

    if (vm->parsed()) {
      auto model = make_model_from_spec(vm_model, vm_umax);
      double gamma = choose_gamma(model, vm_umax);
      std::cout << "gamma = " << gamma << "\n";
      VerificationReport sym = symbol_bound_check(gamma, 200, 200, g.seed);
      auto grid = grid_from(8.0, 512, 0.5 / 64, 0.5);
      auto u0 = project_initial(gaussian_density(0.0, 0.25), grid);
      auto fp_traj = solve_nonlinear_fp(model, u0, 0.0, grid);
      PathField flat;
      flat.dt = grid.dt;
      flat.grid = grid;
      flat.snapshots.assign(static_cast<size_t>(grid.n_steps) + 1, u0);
      double factor = contraction_factor(flat, fp_traj, model, gamma);
      sym.add(Check::one_sided("measured_contraction_factor", factor, 0.45,
                               0.0, "prop:moderateduniq"));
      write_file(root, "mild_report.json", sym.to_json());
      return report_exit(sym);
    }

    if (cd->parsed()) {
      auto coeffs = make_coefficients(cd_b, cd_sigma, cd_ell, cd_gamma);
      EstimatorConfig est;
      est.type = cd_est == "nw" ? EstimatorConfig::Type::nw
                                : EstimatorConfig::Type::binned;
      auto run = simulate_conditional(coeffs,
                                      independent_gaussian_pair(0, 1, 0, 1),
                                      cd_n, est, cd_dt, cd_T, g.seed, {});
      const auto& xs = run.x_snaps.back();
      const auto& ys = run.y_snaps.back();
      double lo = *std::min_element(xs.begin(), xs.end());
      double hi = *std::max_element(xs.begin(), xs.end());
      auto lam = binned_conditional(xs, ys, {}, coeffs.ell, 64, lo, hi);
      auto gam = binned_conditional(xs, ys, {}, coeffs.gamma, 64, lo, hi);
      MollifierSpec ms;
      ms.bandwidth = default_bandwidth(xs);
      auto rho = kde_grid(xs, {}, ms, lo, (hi - lo) / 64, 64);
      std::ostringstream csv;
      csv << "x,lambda_hat,gamma_hat,rho_hat\n";
      char buf[128];
      for (int i = 0; i < 64; ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n",
                      lo + (i + 0.5) * (hi - lo) / 64,
                      lam.values[static_cast<size_t>(i)],
                      gam.values[static_cast<size_t>(i)],
                      rho[static_cast<size_t>(i)]);
        csv << buf;
      }
      write_file(root, "conditional_final.csv", csv.str());
      auto rep = spot_check_ellipticity(coeffs, g.seed);
      rep.add(Check::one_sided("bound_violations",
                               static_cast<double>(run.bound_violations), 0.0,
                               0.0, "sec:ConditionalDiffusion"));
      write_file(root, "conditional_report.json", rep.to_json());
      std::cout << "degenerate_queries=" << run.degenerate_queries << "\n";
      return report_exit(rep);
    }

    if (pc->parsed()) {
      auto coeffs = make_coefficients("zero", pc_sigma, pc_ell, pc_gamma);
      PathNormSpec norm;
      norm.c = 4.0 * (coeffs.lip_ell * coeffs.lip_ell +
                      coeffs.lip_gamma * coeffs.lip_gamma);
      norm.dt = pc_dt;
      norm.t_final = pc_T;
      auto res = picard_iterate(coeffs, independent_gaussian_pair(0, 1, 0, 1),
                                pc_n, norm, pc_k, g.seed);
      std::ostringstream csv;
      csv << "k,distance\n";
      char buf[64];
      for (size_t k = 0; k < res.distances.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", k + 1,
                      res.distances[k]);
        csv << buf;
      }
      write_file(root, "picard_distances.csv", csv.str());
      VerificationReport rep;
      rep.title = "Picard iteration";
      rep.add(Check::one_sided("geometric_ratio", res.geometric_ratio, 0.8,
                               0.0, "proofst:conditionalexists_1"));
      rep.add(Check::one_sided("no_contraction_flag",
                               res.no_contraction ? 1.0 : 0.0, 0.0, 0.0,
                               "proofst:conditionalexists_1"));
      write_file(root, "picard_report.json", rep.to_json());
      return report_exit(rep);
    }

    if (gc->parsed()) {
      auto coeffs = make_coefficients(gc_b, gc_sigma, gc_ell, gc_gamma);
      EstimatorConfig est;
      auto p_run = simulate_conditional(
          coeffs, independent_gaussian_pair(0, 1, 0, 1), gc_n, est, gc_dt,
          gc_T, g.seed, {});
      auto q_run = simulate_girsanov_q(
          coeffs, independent_gaussian_pair(0, 1, 0, 1), gc_n, est, gc_dt,
          gc_T, g.seed + 1, {});
      auto rep = weighted_conditional_check(
          p_run, q_run, [](double, double y) { return std::tanh(y); }, est,
          g.seed + 2);
      auto mart = exp_mart_bound_check(q_run, coeffs, g.seed + 3);
      for (auto& c : mart.checks) rep.add(c);
      write_file(root, "girsanov_report.json", rep.to_json());
      return report_exit(rep);
    }

    if (cs->parsed()) {
      Config cfg;
      if (!cs_config.empty()) cfg = Config::load(cs_config);
      if (cs_levels.empty()) {
        if (cs_study == "fp_heat_h") cs_levels = {1.0 / 64, 1.0 / 128, 1.0 / 256};
        else if (cs_study == "fp_heat_dt") cs_levels = {4e-3, 2e-3, 1e-3};
        else if (cs_study == "eps_stability") cs_levels = {0.1, 0.05, 0.025, 0.0125};
        else if (cs_study == "moderated_n") cs_levels = {1e3, 1e4, 1e5};
        else cs_levels = {0.4, 0.2, 0.1};
      }
      std::vector<uint64_t> seeds;
      for (int s = 0; s < cs_seeds; ++s)
        seeds.push_back(g.seed + static_cast<uint64_t>(s));
      auto res = run_convergence_study(cs_study, cfg, cs_levels, seeds);
      write_file(root, "study_" + cs_study + ".csv", res.to_csv());
      write_file(root, "study_" + cs_study + ".json", res.to_json());
      if (res.slope)
        std::cout << "loglog slope: " << *res.slope << "\n";
      return 0;
    }

    if (st->parsed()) {
      AcceptanceOptions opts;
      opts.seed = g.seed;
      opts.quick = st_quick;
      auto results = run_acceptance(opts);
      std::cout << acceptance_summary(results);
      std::string all_json = "[\n";
      bool all_pass = true;
      for (size_t i = 0; i < results.size(); ++i) {
        all_pass = all_pass && results[i].pass;
        all_json += "{\"criterion\": " + std::to_string(results[i].index) +
                    ", \"pass\": " + (results[i].pass ? "true" : "false");
        if (!g.strict_deterministic)
          all_json += ", \"seconds\": " + std::to_string(results[i].seconds);
        all_json += ", \"reports\": [";
        for (size_t r = 0; r < results[i].reports.size(); ++r) {
          all_json += results[i].reports[r].to_json();
          if (r + 1 < results[i].reports.size()) all_json += ",";
        }
        all_json += "]}";
        if (i + 1 < results.size()) all_json += ",\n";
      }
      all_json += "\n]\n";
      write_file(root, "selftest_report.json", all_json);
      return all_pass ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
