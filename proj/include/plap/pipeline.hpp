#pragma once

// Run orchestration for the eig / check / geometry / solve subcommands and
// report emission (report.json, eigenfunction.csv, lowpoint.csv,
// solution.csv, trace.csv).

#include "plap/config.hpp"
#include "plap/eigenpair.hpp"
#include "plap/functional.hpp"
#include "plap/hypotheses.hpp"
#include "plap/mountain_pass.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

namespace plap {

enum ExitCode : int {
  exit_ok = 0,
  exit_usage = 1,
  exit_hypothesis = 2,
  exit_geometry = 3,
  exit_nonconvergence = 4,
};

using Json = nlohmann::ordered_json;

struct RunOutcome {
  int exit_code = exit_ok;
  Json report;
};

namespace detail {

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Non-finite values become null in JSON; keep them readable instead.
inline Json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline Json describe(const RunConfig& c) {
  Json j;
  j["dimension"] = c.dimension;
  j["x_range"] = {c.x_range[0], c.x_range[1]};
  if (c.dimension == 1) {
    j["n"] = c.n;
  } else {
    j["y_range"] = {c.y_range[0], c.y_range[1]};
    j["nx"] = c.nx;
    j["ny"] = c.ny;
  }
  j["p"] = c.p;
  j["bc"] = to_string(c.bc);
  auto expr = [&](const char* key, const std::optional<Expression>& e) {
    if (e) j[key] = e->print();
  };
  expr("f", c.f);
  expr("F", c.F);
  expr("g", c.g);
  expr("G", c.G);
  expr("theta", c.theta);
  expr("mu", c.mu);
  expr("h", c.h);
  expr("h_boundary", c.h_boundary);
  expr("a", c.growth_a);
  if (c.c1) j["c1"] = *c.c1;
  j["tol"] = c.solver.mountain_pass.tol;
  j["max_iter"] = c.solver.mountain_pass.max_iter;
  j["path_nodes"] = c.solver.mountain_pass.path_nodes;
  j["rho_grid"] = c.solver.geometry.rho_grid;
  j["a_max"] = c.solver.geometry.a_max;
  return j;
}

inline Json to_json(const EigenPair& e, double p) {
  const Vector& u = e.u1.values();
  return Json{{"lambda1", e.lambda1},
              {"bc", to_string(e.bc)},
              {"residual", e.residual},
              {"iterations", e.iterations},
              {"converged", e.converged},
              {"lp_norm", std::pow(lp_norm_p(e.u1.mesh(), u, p), 1.0 / p)},
              {"min_value", u.minCoeff()},
              {"max_value", u.maxCoeff()},
              {"diagnostic", e.diagnostic}};
}

inline Json to_json(const ClauseResult& r) {
  Json j;
  j["clause"] = r.clause;
  j["verdict"] = to_string(r.verdict);
  Json ev = Json::object();
  for (const auto& [k, v] : r.evidence) ev[k] = number(v);
  j["evidence"] = ev;
  if (r.witness) {
    Json pt = Json::object();
    for (const auto& [k, v] : r.witness->point) pt[k] = number(v);
    j["witness"] = {{"point", pt},
                    {"value", number(r.witness->value)},
                    {"bound", number(r.witness->bound)},
                    {"relation", r.witness->relation}};
  }
  j["notes"] = r.notes;
  return j;
}

inline Json to_json(const HypothesisReport& rep) {
  Json clauses = Json::array();
  for (const auto& c : rep.clauses) clauses.push_back(to_json(c));
  return Json{{"overall", to_string(rep.overall)}, {"clauses", clauses}};
}

inline Json to_json(const GeometryCertificate& c) {
  Json scan = Json::array();
  for (const auto& s : c.sphere_scan)
    scan.push_back({{"rho", s.rho}, {"min_energy", number(s.min_energy)}, {"samples", s.samples}});
  Json ray = Json::array();
  for (const auto& r : c.ray_trace) ray.push_back({{"scale", r.scale}, {"energy", number(r.energy)}, {"norm", r.norm}});
  return Json{{"certified", c.certified},         {"rho", c.rho},
              {"a_estimate", c.a_estimate},       {"e_energy", c.e_energy},
              {"e_norm", c.e_norm},               {"sphere_samples", c.sphere_samples},
              {"sphere_scan", scan},              {"ray_trace", ray},
              {"diagnostic", c.diagnostic}};
}

inline Json to_json(const MountainPassResult& r) {
  return Json{{"level", r.level},
              {"residual", r.residual},
              {"norm", r.norm},
              {"iterations", r.iterations},
              {"polish_iterations", r.polish_iterations},
              {"path_nodes", r.path_nodes},
              {"converged", r.converged},
              {"max_history_norm", r.max_history_norm},
              {"ps_violation", r.ps_violation},
              {"diagnostic", r.diagnostic}};
}

inline Json to_json(const VerificationRecord& v) {
  return Json{{"residual", v.residual}, {"energy", v.energy},       {"norm", v.norm},
              {"residual_ok", v.residual_ok}, {"nontrivial", v.nontrivial}, {"passed", v.passed}};
}

inline void write_csv(const std::filesystem::path& path, const Field& u) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_field_csv(os, u);
}

inline void write_trace(const std::filesystem::path& path, const std::vector<CeramiRecord>& history) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "iter,level,residual,cerami\n";
  char buf[128];
  for (std::size_t i = 0; i < history.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", i, history[i].energy, history[i].residual,
                  history[i].measure);
    os << buf;
  }
}

// Accumulates the report and the stage list while a run is in progress.
class Run {
 public:
  Run(Subcommand cmd, std::filesystem::path out) : out_(std::move(out)) {
    report_["schema"] = 1;
    report_["subcommand"] = to_string(cmd);
    report_["timestamp"] = utc_timestamp();
    report_["stages"] = Json::array();
  }

  Json& report() { return report_; }
  const std::filesystem::path& out() const { return out_; }

  void begin(const std::string& stage) {
    report_["stages"].push_back({{"name", stage}, {"status", "running"}, {"message", ""}});
  }

  void end(const std::string& status, const std::string& message = {}) {
    Json& s = report_["stages"].back();
    s["status"] = status;
    s["message"] = message;
  }

  RunOutcome finish(int code, const std::string& message = {}) {
    report_["exit_code"] = code;
    report_["status"] = code == exit_ok ? "ok" : "failed";
    report_["message"] = message;
    std::ofstream os(out_ / "report.json");
    if (os) os << report_.dump(2) << "\n";
    return {code, report_};
  }

 private:
  std::filesystem::path out_;
  Json report_;
};

}  // namespace detail

// Executes the pipeline for `cmd`; solve runs eig, check, geometry,
// mountain pass and verification in order and stops at the first failed
// stage. Every path writes report.json into `out_dir`.
inline RunOutcome run(Subcommand cmd, RunConfig config, const std::filesystem::path& out_dir,
                      std::optional<std::uint64_t> seed = std::nullopt);

namespace detail {

inline RunOutcome run_stages(Run& run, Subcommand cmd, RunConfig& config, const std::filesystem::path& out_dir,
                             std::optional<std::uint64_t> seed) {
  if (seed) config.solver.seed = *seed;
  run.report()["seed"] = config.solver.seed;
  run.report()["config"] = detail::describe(config);

  run.begin("config");
  try {
    config.require_for(cmd);
  } catch (const ConfigError& e) {
    run.end("error", e.what());
    return run.finish(exit_usage, e.what());
  }
  run.end("ok");

  const Mesh mesh = config.build_mesh();

  run.begin("eig");
  EigenOptions eopts = config.solver.eigen;
  eopts.seed = config.solver.seed;
  const EigenPair eigen = compute_first_eigenpair(mesh, config.p, config.bc, eopts);
  run.report()["eigenpair"] = detail::to_json(eigen, config.p);
  detail::write_csv(out_dir / "eigenfunction.csv", eigen.u1);
  if (!eigen.converged) {
    run.end("failed", eigen.diagnostic);
    return run.finish(exit_nonconvergence, eigen.diagnostic);
  }
  run.end("ok");
  if (cmd == Subcommand::eig) return run.finish(exit_ok);

  ProblemSpec spec = config.problem(mesh);
  spec.lambda1 = eigen.lambda1;

  if (cmd == Subcommand::check || cmd == Subcommand::solve) {
    run.begin("check");
    HypothesisReport hyp;
    try {
      hyp = check_all(spec, eigen, config.plan);
    } catch (const std::exception& e) {
      run.end("error", e.what());
      return run.finish(exit_usage, e.what());
    }
    run.report()["hypotheses"] = detail::to_json(hyp);
    if (hyp.overall != Verdict::pass) {
      std::string msg = std::string("hypotheses ") + to_string(hyp.overall) + ":";
      for (const auto& c : hyp.clauses)
        if (c.verdict != Verdict::pass) msg += " " + c.clause + "=" + to_string(c.verdict);
      run.end("failed", msg);
      return run.finish(exit_hypothesis, msg);
    }
    run.end("ok");
    if (cmd == Subcommand::check) return run.finish(exit_ok);
  }

  std::optional<Functional> fn;
  run.begin("functional");
  try {
    fn.emplace(spec);
  } catch (const std::exception& e) {
    run.end("error", e.what());
    return run.finish(exit_usage, e.what());
  }
  run.end("ok");

  run.begin("geometry");
  GeometryCertificate cert;
  GeometryOptions gopts = config.solver.geometry;
  gopts.seed = config.solver.seed;
  try {
    cert = certify_ring(*fn, eigen, gopts);
  } catch (const std::exception& e) {
    run.end("error", e.what());
    return run.finish(exit_geometry, e.what());
  }
  run.report()["certificate"] = detail::to_json(cert);
  if (!cert.certified) {
    run.end("failed", cert.diagnostic);
    return run.finish(exit_geometry, "geometry certificate failed: " + cert.diagnostic);
  }
  detail::write_csv(out_dir / "lowpoint.csv", cert.e);
  run.end("ok");
  if (cmd == Subcommand::geometry) return run.finish(exit_ok);

  run.begin("mountain_pass");
  MountainPassResult mp;
  try {
    mp = mountain_pass(*fn, cert.e, config.solver.mountain_pass, &cert);
  } catch (const std::exception& e) {
    run.end("error", e.what());
    return run.finish(exit_nonconvergence, e.what());
  }
  run.report()["solution"] = detail::to_json(mp);
  Json history = Json::array();
  for (std::size_t i = 0; i < mp.history.size(); ++i) {
    const auto& h = mp.history[i];
    history.push_back({{"iter", i},
                       {"energy", detail::number(h.energy)},
                       {"residual", detail::number(h.residual)},
                       {"measure", detail::number(h.measure)},
                       {"norm", detail::number(h.norm)}});
  }
  run.report()["cerami_history"] = history;
  detail::write_csv(out_dir / "solution.csv", mp.u_star);
  detail::write_trace(out_dir / "trace.csv", mp.history);
  if (!mp.converged) {
    run.end("failed", mp.diagnostic);
    return run.finish(exit_nonconvergence, "mountain pass did not converge: " + mp.diagnostic);
  }
  run.end("ok", mp.diagnostic);

  run.begin("verify");
  const VerificationRecord ver = verify_solution(*fn, mp.u_star, config.solver.mountain_pass.tol);
  Json vj = detail::to_json(ver);
  // The ordering against the sphere estimate only applies when the path
  // has to cross that sphere, i.e. in the Dirichlet setting.
  if (config.bc == Boundary::dirichlet) vj["level_ordering"] = cert.a_estimate <= mp.level + config.solver.mountain_pass.tol;
  run.report()["verification"] = vj;
  if (!ver.passed || (vj.contains("level_ordering") && !vj["level_ordering"].get<bool>())) {
    const std::string msg = !ver.residual_ok ? "residual above tolerance"
                            : !ver.nontrivial ? "solution is trivial"
                                              : "level below the certified sphere minimum";
    run.end("failed", msg);
    return run.finish(exit_nonconvergence, "verification failed: " + msg);
  }
  run.end("ok");
  return run.finish(exit_ok);
}

}  // namespace detail

inline RunOutcome run(Subcommand cmd, RunConfig config, const std::filesystem::path& out_dir,
                      std::optional<std::uint64_t> seed) {
  std::filesystem::create_directories(out_dir);
  detail::Run run(cmd, out_dir);
  try {
    return detail::run_stages(run, cmd, config, out_dir, seed);
  } catch (const std::exception& e) {
    const Json& stages = run.report()["stages"];
    if (!stages.empty() && stages.back()["status"] == "running") run.end("error", e.what());
    return run.finish(exit_usage, std::string("unexpected error: ") + e.what());
  }
}

// Loads the config and runs; config errors still leave a report behind.
inline RunOutcome run_from_file(Subcommand cmd, const std::string& config_path, const std::filesystem::path& out_dir,
                                std::optional<std::uint64_t> seed = std::nullopt) {
  RunConfig config;
  try {
    config = load_config(config_path);
  } catch (const ConfigError& e) {
    std::filesystem::create_directories(out_dir);
    detail::Run run(cmd, out_dir);
    run.begin("config");
    run.end("error", e.what());
    if (!e.key().empty()) run.report()["stages"].back()["key"] = e.key();
    return run.finish(exit_usage, e.what());
  }
  return run(cmd, std::move(config), out_dir, seed);
}

}  // namespace plap
