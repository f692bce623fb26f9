#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "ssp/assumptions.hpp"
#include "ssp/auc.hpp"
#include "ssp/matrix_game.hpp"
#include "ssp/risk_lab.hpp"
#include "ssp/shifted_process.hpp"
#include "ssp/solver.hpp"
#include "ssp/version.hpp"

namespace ssp {

using json = nlohmann::json;

// Config problems map to exit code 1; they carry the offending field or the
// parser's byte-anchored message.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace io_detail {

inline void require_keys(const json& j, const std::set<std::string>& required,
                         const std::set<std::string>& optional,
                         const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& k : required)
    if (!j.contains(k))
      throw ConfigError(where + ": missing required field \"" + k + "\"");
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (!required.count(k) && !optional.count(k))
      throw ConfigError(where + ": unknown field \"" + k + "\"");
  }
}

template <typename T>
T get_field(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + ": bad value for \"" + key + "\": " + e.what());
  }
}

inline std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace io_detail

// ---------------------------------------------------------------------------
// Instance specs

inline std::shared_ptr<ProblemInstance> parse_instance(const json& j) {
  using io_detail::get_field;
  if (!j.is_object() || !j.contains("type"))
    throw ConfigError("instance: missing required field \"type\"");
  const std::string type = get_field<std::string>(j, "type", "instance");

  if (type == "matrix_game") {
    io_detail::require_keys(
        j, {"type", "dim", "lambda_x", "lambda_y", "truncation_L"},
        {"atoms", "seed", "matrices", "probs"}, "instance(matrix_game)");
    MatrixGameSpec spec;
    if (j.contains("matrices")) {
      spec.dim = get_field<std::size_t>(j, "dim", "instance");
      spec.lambda_x = get_field<double>(j, "lambda_x", "instance");
      spec.lambda_y = get_field<double>(j, "lambda_y", "instance");
      spec.truncation_L = get_field<double>(j, "truncation_L", "instance");
      const auto mats = get_field<std::vector<std::vector<std::vector<double>>>>(
          j, "matrices", "instance");
      for (const auto& m : mats) {
        std::vector<double> flat;
        for (const auto& row : m)
          for (double v : row) flat.push_back(v);
        spec.matrices.push_back(std::move(flat));
      }
      if (j.contains("probs"))
        spec.probs = get_field<std::vector<double>>(j, "probs", "instance");
      else
        spec.probs.assign(spec.matrices.size(),
                          1.0 / static_cast<double>(spec.matrices.size()));
    } else {
      spec = make_matrix_game(get_field<std::size_t>(j, "dim", "instance"),
                              get_field<double>(j, "lambda_x", "instance"),
                              get_field<double>(j, "lambda_y", "instance"),
                              get_field<double>(j, "truncation_L", "instance"),
                              j.contains("atoms")
                                  ? get_field<std::size_t>(j, "atoms", "instance")
                                  : 3,
                              j.contains("seed")
                                  ? get_field<std::uint64_t>(j, "seed", "instance")
                                  : 0);
    }
    try {
      return std::make_shared<MatrixGameInstance>(std::move(spec));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("instance(matrix_game): ") + e.what());
    }
  }

  if (type == "auc") {
    io_detail::require_keys(j, {"type", "feature_dim", "p", "beta", "radius"},
                            {"atoms", "seed"}, "instance(auc)");
    try {
      AucSpec spec = make_auc_dataset(
          get_field<std::size_t>(j, "feature_dim", "instance"),
          j.contains("atoms") ? get_field<std::size_t>(j, "atoms", "instance") : 20,
          get_field<double>(j, "p", "instance"),
          get_field<double>(j, "beta", "instance"),
          get_field<double>(j, "radius", "instance"),
          j.contains("seed") ? get_field<std::uint64_t>(j, "seed", "instance") : 0);
      return std::make_shared<AucInstance>(std::move(spec));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("instance(auc): ") + e.what());
    }
  }
  throw ConfigError("instance: unknown type \"" + type + "\"");
}

inline SolverConfig parse_solver(const json& j, const std::string& where) {
  io_detail::require_keys(j, {},
                          {"step_size", "max_iters", "gap_tolerance",
                           "inner_tolerance", "averaging", "gap_check_every"},
                          where);
  SolverConfig cfg;
  if (j.contains("step_size")) {
    if (j["step_size"].is_string()) {
      if (j["step_size"] != "auto")
        throw ConfigError(where + ": step_size must be a number or \"auto\"");
      cfg.step_size = 0.0;
    } else {
      cfg.step_size = io_detail::get_field<double>(j, "step_size", where);
      if (!(cfg.step_size > 0.0))
        throw ConfigError(where + ": step_size must be positive");
    }
  }
  if (j.contains("max_iters"))
    cfg.max_iters = io_detail::get_field<std::size_t>(j, "max_iters", where);
  if (j.contains("gap_tolerance"))
    cfg.gap_tolerance = io_detail::get_field<double>(j, "gap_tolerance", where);
  if (j.contains("inner_tolerance"))
    cfg.inner_tolerance = io_detail::get_field<double>(j, "inner_tolerance", where);
  if (j.contains("gap_check_every"))
    cfg.gap_check_every = io_detail::get_field<std::size_t>(j, "gap_check_every", where);
  if (j.contains("averaging")) {
    const std::string a = io_detail::get_field<std::string>(j, "averaging", where);
    if (a == "last")
      cfg.averaging = Averaging::Last;
    else if (a == "ergodic")
      cfg.averaging = Averaging::Ergodic;
    else
      throw ConfigError(where + ": averaging must be \"last\" or \"ergodic\"");
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return cfg;
}

// SSP_THREADS overrides the config value; default is hardware concurrency.
inline std::size_t resolve_threads(const json& j, const std::string& where) {
  std::size_t threads = 0;
  if (j.contains("threads"))
    threads = io_detail::get_field<std::size_t>(j, "threads", where);
  if (const char* env = std::getenv("SSP_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0' || v == 0)
      throw ConfigError("SSP_THREADS must be a positive integer");
    threads = static_cast<std::size_t>(v);
  }
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  return threads;
}

inline json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Output writers

inline std::uint64_t config_hash(const json& config) {
  const std::string canon = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << bytes;
}

inline void write_manifest(const std::filesystem::path& out_dir,
                           const std::string& subcommand, const json& config,
                           const std::string& started, const std::string& finished) {
  json m;
  m["subcommand"] = subcommand;
  m["config_hash"] = hash_hex(config_hash(config));
  m["code_version"] = kVersion;
  m["started"] = started;
  m["finished"] = finished;
  for (const char* key : {"master_seed", "seed"})
    if (config.contains(key)) {
      m["master_seed"] = config.at(key);
      break;
    }
  m["parameters"] = config;
  write_file(out_dir / "manifest.json", m.dump(2) + "\n");
}

// Records CSV: header pinned to n,rep,seed,risk,emp_gap,oracle_gap,wall_ms.
// The wall_ms column is a deterministic work proxy (solver iterations), which
// keeps reruns byte-identical; measured time lives in the manifest.
inline std::string records_csv(const std::vector<RiskRecord>& records) {
  std::string out = "n,rep,seed,risk,emp_gap,oracle_gap,wall_ms\n";
  for (const auto& r : records) {
    out += std::to_string(r.n);
    out += ',';
    out += std::to_string(r.rep);
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += io_detail::fmt_real(r.strong_excess_risk);
    out += ',';
    out += io_detail::fmt_real(r.empirical_gap);
    out += ',';
    out += io_detail::fmt_real(r.oracle_gap);
    out += ',';
    out += std::to_string(r.work_units);
    out += '\n';
  }
  return out;
}

inline json rate_fit_json(const ExperimentResult& result) {
  json out;
  json qs = json::array();
  for (const auto& q : result.curve) {
    qs.push_back({{"n", q.n},
                  {"q", q.quantile},
                  {"mean", q.mean},
                  {"median", q.median}});
  }
  out["quantiles"] = qs;
  if (result.has_fit) {
    out["slope"] = result.fit.slope;
    out["intercept"] = result.fit.intercept;
    out["r2"] = result.fit.r2;
    out["residual_rms"] = result.fit.residual_rms;
  }
  return out;
}

inline json assumption_report_json(const AssumptionReport& rep) {
  json out;
  out["n_probe"] = rep.n_probe;
  out["seed"] = rep.seed;
  out["theory"] = {{"sigma_x", rep.theory.sigma_x}, {"sigma_y", rep.theory.sigma_y},
                   {"L_x", rep.theory.L_x},         {"L_y", rep.theory.L_y},
                   {"L_xy", rep.theory.L_xy},
                   {"assumption4_holds", rep.theory.assumption4_holds}};
  out["estimates"] = {{"sigma_x", rep.sigma_x_hat}, {"sigma_y", rep.sigma_y_hat},
                      {"L_x", rep.L_x_hat},         {"L_y", rep.L_y_hat},
                      {"L_xy", rep.L_xy_hat}};
  out["consistent"] = {{"sigma_x", rep.sigma_x_consistent},
                       {"sigma_y", rep.sigma_y_consistent},
                       {"L_x", rep.L_x_consistent},
                       {"L_y", rep.L_y_consistent},
                       {"L_xy", rep.L_xy_consistent},
                       {"assumption4", rep.assumption4_empirical}};
  out["passed"] = rep.passed();
  if (!rep.passed()) out["first_failure"] = rep.first_failure();
  return out;
}

inline json solve_report_json(const SolveReport& rep) {
  json out;
  out["x"] = rep.solution.x;
  out["y"] = rep.solution.y;
  out["final_gap"] = rep.final_gap;
  out["iterations"] = rep.iterations;
  out["converged"] = rep.converged;
  out["gap_trace"] = rep.gap_trace;
  out["gap_trace_iters"] = rep.gap_trace_iters;
  return out;
}

}  // namespace ssp
