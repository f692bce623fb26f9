// ssplab: sample-average approximation lab for stochastic saddle-point
// problems. Subcommands: solve, experiment, verify, shifted.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "ssp/io.hpp"

namespace fs = std::filesystem;
using ssp::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNoConverge = 2;
constexpr int kExitCheckFailed = 3;

struct CmdArgs {
  std::string config_path;
  std::string out_dir;
};

json load_and_prepare(const CmdArgs& args) {
  fs::create_directories(args.out_dir);
  return ssp::load_config(args.config_path);
}

int cmd_solve(const CmdArgs& args) {
  const std::string started = ssp::timestamp_utc();
  const json cfg = load_and_prepare(args);
  ssp::io_detail::require_keys(cfg, {"instance"},
                               {"objective", "n", "seed", "solver", "threads"},
                               "solve config");
  const auto inst = ssp::parse_instance(cfg.at("instance"));
  ssp::SolverConfig scfg;
  if (cfg.contains("solver")) scfg = ssp::parse_solver(cfg.at("solver"), "solver");

  std::string objective = "population";
  if (cfg.contains("objective"))
    objective = ssp::io_detail::get_field<std::string>(cfg, "objective", "solve config");

  ssp::SolveReport rep;
  if (objective == "population") {
    rep = ssp::solve_saddle(ssp::population_objective(*inst), scfg);
  } else if (objective == "empirical") {
    if (!cfg.contains("n") || !cfg.contains("seed"))
      throw ssp::ConfigError("solve config: empirical objective needs \"n\" and \"seed\"");
    const auto n = ssp::io_detail::get_field<std::size_t>(cfg, "n", "solve config");
    const auto seed =
        ssp::io_detail::get_field<std::uint64_t>(cfg, "seed", "solve config");
    const ssp::SampleSet s = ssp::sample(*inst, n, seed);
    rep = ssp::solve_saddle(ssp::empirical_objective(*inst, s), scfg);
  } else {
    throw ssp::ConfigError("solve config: objective must be \"population\" or \"empirical\"");
  }

  std::cout << "instance: " << inst->name() << "\n";
  std::cout << "x:";
  for (double v : rep.solution.x) std::cout << ' ' << ssp::io_detail::fmt_real(v);
  std::cout << "\ny:";
  for (double v : rep.solution.y) std::cout << ' ' << ssp::io_detail::fmt_real(v);
  std::cout << "\ngap: " << ssp::io_detail::fmt_real(rep.final_gap)
            << "\niterations: " << rep.iterations
            << "\nconverged: " << (rep.converged ? "true" : "false") << "\n";

  ssp::write_file(fs::path(args.out_dir) / "solve_report.json",
                  ssp::solve_report_json(rep).dump(2) + "\n");
  ssp::write_manifest(args.out_dir, "solve", cfg, started, ssp::timestamp_utc());
  return rep.converged ? kExitOk : kExitNoConverge;
}

int cmd_experiment(const CmdArgs& args) {
  const std::string started = ssp::timestamp_utc();
  const json cfg = load_and_prepare(args);
  ssp::io_detail::require_keys(
      cfg, {"instance", "n_grid", "replications", "delta", "master_seed"},
      {"solver_empirical", "solver_oracle", "threads"}, "experiment config");
  const auto inst = ssp::parse_instance(cfg.at("instance"));

  ssp::ExperimentConfig ecfg;
  ecfg.n_grid = ssp::io_detail::get_field<std::vector<std::size_t>>(cfg, "n_grid",
                                                                    "experiment config");
  ecfg.replications =
      ssp::io_detail::get_field<std::size_t>(cfg, "replications", "experiment config");
  ecfg.delta = ssp::io_detail::get_field<double>(cfg, "delta", "experiment config");
  ecfg.master_seed =
      ssp::io_detail::get_field<std::uint64_t>(cfg, "master_seed", "experiment config");
  ecfg.empirical_solver.gap_tolerance = 1e-8;
  if (cfg.contains("solver_empirical"))
    ecfg.empirical_solver = ssp::parse_solver(cfg.at("solver_empirical"), "solver_empirical");
  ecfg.oracle_solver.inner_tolerance = 1e-9;
  if (cfg.contains("solver_oracle"))
    ecfg.oracle_solver = ssp::parse_solver(cfg.at("solver_oracle"), "solver_oracle");
  ecfg.threads = ssp::resolve_threads(cfg, "experiment config");
  try {
    ecfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ssp::ConfigError(std::string("experiment config: ") + e.what());
  }

  const ssp::ExperimentResult result = ssp::run_experiment(*inst, ecfg);

  const fs::path out(args.out_dir);
  if (!result.failures.empty()) {
    std::vector<ssp::RiskRecord> done;
    for (const auto& r : result.records)
      if (r.n != 0) done.push_back(r);
    ssp::write_file(out / "records.csv.partial", ssp::records_csv(done));
    ssp::write_manifest(args.out_dir, "experiment", cfg, started, ssp::timestamp_utc());
    for (const auto& f : result.failures)
      std::cerr << "replication failed: " << f << "\n";
    return kExitNoConverge;
  }

  ssp::write_file(out / "records.csv", ssp::records_csv(result.records));
  ssp::write_file(out / "rate_fit.json", ssp::rate_fit_json(result).dump(2) + "\n");
  ssp::write_manifest(args.out_dir, "experiment", cfg, started, ssp::timestamp_utc());

  for (const auto& q : result.curve)
    std::cout << "n=" << q.n << " quantile=" << ssp::io_detail::fmt_real(q.quantile)
              << " mean=" << ssp::io_detail::fmt_real(q.mean) << "\n";
  if (result.has_fit)
    std::cout << "slope=" << ssp::io_detail::fmt_real(result.fit.slope)
              << " r2=" << ssp::io_detail::fmt_real(result.fit.r2) << "\n";
  if (!result.all_converged) {
    std::cerr << "some replications did not reach gap tolerance\n";
    return kExitNoConverge;
  }
  return kExitOk;
}

int cmd_verify(const CmdArgs& args) {
  const std::string started = ssp::timestamp_utc();
  const json cfg = load_and_prepare(args);
  ssp::io_detail::require_keys(cfg, {"instance", "n_probe", "seed"}, {"threads"},
                               "verify config");
  const auto inst = ssp::parse_instance(cfg.at("instance"));
  const auto n_probe =
      ssp::io_detail::get_field<std::size_t>(cfg, "n_probe", "verify config");
  const auto seed = ssp::io_detail::get_field<std::uint64_t>(cfg, "seed", "verify config");
  if (n_probe < 2) throw ssp::ConfigError("verify config: n_probe must be >= 2");

  const ssp::AssumptionReport rep = ssp::verify_assumptions(*inst, n_probe, seed);
  const json out = ssp::assumption_report_json(rep);
  std::cout << "sigma_x: est " << rep.sigma_x_hat << " vs theory " << rep.theory.sigma_x
            << (rep.sigma_x_consistent ? " ok" : " FAIL") << "\n"
            << "sigma_y: est " << rep.sigma_y_hat << " vs theory " << rep.theory.sigma_y
            << (rep.sigma_y_consistent ? " ok" : " FAIL") << "\n"
            << "L_x: est " << rep.L_x_hat << " vs theory " << rep.theory.L_x
            << (rep.L_x_consistent ? " ok" : " FAIL") << "\n"
            << "L_y: est " << rep.L_y_hat << " vs theory " << rep.theory.L_y
            << (rep.L_y_consistent ? " ok" : " FAIL") << "\n"
            << "L_xy: est " << rep.L_xy_hat << " vs theory " << rep.theory.L_xy
            << (rep.L_xy_consistent ? " ok" : " FAIL") << "\n"
            << "assumption4: theory "
            << (rep.theory.assumption4_holds ? "holds" : "FAILS") << ", empirical "
            << (rep.assumption4_empirical ? "holds" : "FAILS") << "\n";
  ssp::write_file(fs::path(args.out_dir) / "verify_report.json", out.dump(2) + "\n");
  ssp::write_manifest(args.out_dir, "verify", cfg, started, ssp::timestamp_utc());
  if (!rep.passed()) {
    std::cout << "FAILED: " << rep.first_failure() << "\n";
    return kExitCheckFailed;
  }
  std::cout << "all assumption checks passed\n";
  return kExitOk;
}

int cmd_shifted(const CmdArgs& args) {
  const std::string started = ssp::timestamp_utc();
  const json cfg = load_and_prepare(args);
  ssp::io_detail::require_keys(
      cfg, {"instance", "n", "seed", "rademacher_draws", "grid_resolution"},
      {"lemma41_replications", "localization_probes", "solver_empirical",
       "solver_oracle", "threads", "zoom_rounds"},
      "shifted config");
  const auto inst = ssp::parse_instance(cfg.at("instance"));

  ssp::ShiftedProcessConfig scfg;
  scfg.n = ssp::io_detail::get_field<std::size_t>(cfg, "n", "shifted config");
  scfg.seed = ssp::io_detail::get_field<std::uint64_t>(cfg, "seed", "shifted config");
  scfg.rademacher_draws =
      ssp::io_detail::get_field<std::size_t>(cfg, "rademacher_draws", "shifted config");
  scfg.grid_resolution =
      ssp::io_detail::get_field<double>(cfg, "grid_resolution", "shifted config");
  if (cfg.contains("zoom_rounds"))
    scfg.zoom_rounds =
        ssp::io_detail::get_field<std::size_t>(cfg, "zoom_rounds", "shifted config");
  scfg.threads = ssp::resolve_threads(cfg, "shifted config");
  try {
    scfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ssp::ConfigError(std::string("shifted config: ") + e.what());
  }
  const std::size_t lemma41_reps =
      cfg.contains("lemma41_replications")
          ? ssp::io_detail::get_field<std::size_t>(cfg, "lemma41_replications",
                                                   "shifted config")
          : 100;
  const std::size_t loc_probes =
      cfg.contains("localization_probes")
          ? ssp::io_detail::get_field<std::size_t>(cfg, "localization_probes",
                                                   "shifted config")
          : 1000;

  ssp::SolverConfig emp_cfg;
  emp_cfg.gap_tolerance = 1e-9;
  if (cfg.contains("solver_empirical"))
    emp_cfg = ssp::parse_solver(cfg.at("solver_empirical"), "solver_empirical");
  ssp::SolverConfig orc_cfg;
  orc_cfg.inner_tolerance = 1e-9;
  if (cfg.contains("solver_oracle"))
    orc_cfg = ssp::parse_solver(cfg.at("solver_oracle"), "solver_oracle");

  const ssp::TheoreticalConstants consts = inst->constants();
  json out;
  bool all_passed = true;
  if (!consts.assumption4_holds) {
    out["assumption4_holds"] = false;
    out["failure"] = "assumption4 violated: L_xy > min(sigma_x, sigma_y)";
    ssp::write_file(fs::path(args.out_dir) / "shifted_report.json", out.dump(2) + "\n");
    ssp::write_manifest(args.out_dir, "shifted", cfg, started, ssp::timestamp_utc());
    std::cout << "FAILED: assumption4 violated\n";
    return kExitCheckFailed;
  }

  const ssp::PopulationOracle oracle(*inst, orc_cfg);
  const ssp::ShiftedConstants sc = ssp::lambda_lemma42(consts, scfg.n);
  out["lambda"] = sc.lambda;
  out["C"] = sc.C;
  out["C_tilde"] = sc.C_tilde;
  out["L_tilde"] = sc.L_tilde;

  const ssp::ExpMomentReport em = ssp::exp_moment_check(*inst, scfg, oracle);
  out["exp_moment"] = {{"log_mc_estimate", em.log_mc_estimate},
                       {"log_theory_bound", em.log_theory_bound},
                       {"passed", em.passed},
                       {"draws", em.draws},
                       {"dim", em.dim}};
  all_passed = all_passed && em.passed;
  std::cout << "exp_moment: log MC " << em.log_mc_estimate << " <= log bound "
            << em.log_theory_bound << (em.passed ? " ok" : " FAIL") << "\n";

  {
    std::string csv = "draw,sup\n";
    for (std::size_t j = 0; j < em.suprema.size(); ++j)
      csv += std::to_string(j) + "," + ssp::io_detail::fmt_real(em.suprema[j]) + "\n";
    ssp::write_file(fs::path(args.out_dir) / "suprema.csv", csv);
  }

  // Grid-refinement stability of the supremum on the first draw.
  {
    ssp::CounterRng rng(ssp::derive_seed(scfg.seed, 0x657073ULL, 0));
    const ssp::SampleSet s =
        ssp::sample(*inst, scfg.n, ssp::derive_seed(scfg.seed, 0x736dULL));
    std::vector<double> eps(scfg.n);
    for (auto& e : eps) e = rng.next_sign();
    const double coarse = ssp::sup_shifted_process(*inst, s, eps, scfg, oracle).value;
    ssp::ShiftedProcessConfig fine = scfg;
    fine.grid_resolution = scfg.grid_resolution / 10.0;
    const double refined = ssp::sup_shifted_process(*inst, s, eps, fine, oracle).value;
    const bool stable = std::abs(coarse - refined) <= 1e-3;
    out["sup_stability"] = {{"coarse", coarse}, {"refined", refined}, {"passed", stable}};
    all_passed = all_passed && stable;
    std::cout << "sup stability: coarse " << coarse << " refined " << refined
              << (stable ? " ok" : " FAIL") << "\n";
  }

  {
    double worst = std::numeric_limits<double>::infinity();
    bool passed = true;
    for (std::size_t r = 0; r < lemma41_reps; ++r) {
      const ssp::Lemma41Report rep = ssp::check_lemma41_chain(
          *inst, scfg.n, ssp::derive_seed(scfg.seed, 0x6c34ULL, r), emp_cfg, oracle);
      worst = std::min({worst, rep.slack, rep.ssp_slack, rep.esp_slack});
      passed = passed && rep.passed;
    }
    out["lemma41"] = {{"replications", lemma41_reps},
                      {"worst_slack", worst},
                      {"passed", passed}};
    all_passed = all_passed && passed;
    std::cout << "lemma41 chain: worst slack " << worst << (passed ? " ok" : " FAIL")
              << "\n";
  }

  {
    const ssp::LocalizationReport rep =
        ssp::check_localization(*inst, loc_probes, scfg.seed, oracle);
    out["localization"] = {{"probes", rep.probes},
                           {"worst_gradnorm_slack", rep.worst_gradnorm_slack},
                           {"worst_quadratic_slack", rep.worst_quadratic_slack},
                           {"passed", rep.passed}};
    all_passed = all_passed && rep.passed;
    std::cout << "localization: worst slacks " << rep.worst_gradnorm_slack << ", "
              << rep.worst_quadratic_slack << (rep.passed ? " ok" : " FAIL") << "\n";
  }

  out["passed"] = all_passed;
  ssp::write_file(fs::path(args.out_dir) / "shifted_report.json", out.dump(2) + "\n");
  ssp::write_manifest(args.out_dir, "shifted", cfg, started, ssp::timestamp_utc());
  std::cout << (all_passed ? "all shifted-process checks passed\n"
                           : "shifted-process checks FAILED\n");
  return all_passed ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sample-average approximation lab for stochastic saddle problems"};
  app.require_subcommand(1);

  CmdArgs solve_args, exp_args, verify_args, shifted_args;
  auto add = [](CLI::App* sub, CmdArgs& args) {
    sub->add_option("--config", args.config_path, "JSON config path")->required();
    sub->add_option("--out", args.out_dir, "output directory")->required();
  };
  CLI::App* solve = app.add_subcommand("solve", "solve one saddle problem");
  CLI::App* experiment =
      app.add_subcommand("experiment", "excess-risk replication study");
  CLI::App* verify = app.add_subcommand("verify", "check instance assumptions");
  CLI::App* shifted =
      app.add_subcommand("shifted", "shifted-process and inequality checks");
  add(solve, solve_args);
  add(experiment, exp_args);
  add(verify, verify_args);
  add(shifted, shifted_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(solve_args);
    if (experiment->parsed()) return cmd_experiment(exp_args);
    if (verify->parsed()) return cmd_verify(verify_args);
    if (shifted->parsed()) return cmd_shifted(shifted_args);
  } catch (const ssp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
