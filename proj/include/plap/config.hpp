#pragma once

// Run configuration: line-oriented `[section]` blocks of `key = value`
// pairs. Expression values are double-quoted; `#` starts a comment.
//
//   [domain]     dimension, x_range, y_range, n | nx, ny
//   [problem]    p, bc, f, F, g, G
//   [hypotheses] theta, mu, h, h_boundary, a, c1, <clause>_range,
//                <clause>_per_decade, <clause>_signs, <clause>_tail,
//                h_scales, h_range   (clause: growth, theta, vanishing, ll)
//   [solver]     tol, max_iter, path_nodes, rho_grid, a_max, seed, ...

#include "plap/functional.hpp"
#include "plap/hypotheses.hpp"
#include "plap/mountain_pass.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace plap {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::string key = {}, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        key_(std::move(key)),
        line_(line) {}
  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  std::string key_;
  int line_;
};

enum class Subcommand { eig, check, geometry, solve };

inline const char* to_string(Subcommand s) {
  switch (s) {
    case Subcommand::eig:
      return "eig";
    case Subcommand::check:
      return "check";
    case Subcommand::geometry:
      return "geometry";
    case Subcommand::solve:
      return "solve";
  }
  return "";
}

struct SolverSettings {
  EigenOptions eigen;
  GeometryOptions geometry;
  MountainPassOptions mountain_pass;
  std::uint64_t seed = 1;
};

struct RunConfig {
  int dimension = 1;
  Point x_range{0.0, 1.0};
  Point y_range{0.0, 1.0};
  int n = 0;
  int nx = 0;
  int ny = 0;

  double p = 2.0;
  Boundary bc = Boundary::dirichlet;
  std::optional<Expression> f, F, g, G;

  std::optional<Expression> theta, mu, h, h_boundary, growth_a;
  std::optional<double> c1;
  SamplePlan plan;

  SolverSettings solver;

  Mesh build_mesh() const {
    if (dimension == 1) return build_interval_mesh(x_range[0], x_range[1], n);
    return build_rectangle_mesh(x_range, y_range, nx, ny);
  }

  // Problem data for the functional and the checks; lambda1 is filled in
  // by the caller once the eigenpair is known.
  ProblemSpec problem(const Mesh& mesh) const {
    if (!f) throw ConfigError("missing key", "f");
    ProblemSpec s;
    s.p = p;
    s.bc = bc;
    s.mesh = mesh;
    s.f = *f;
    s.F = F ? Antiderivative(*f, *F) : Antiderivative(*f);
    s.g = g;
    if (g) s.G = G ? Antiderivative(*g, *G) : Antiderivative(*g);
    s.theta = theta;
    s.mu = mu;
    s.h = h;
    s.h_boundary = h_boundary;
    s.growth_a = growth_a;
    s.c1 = c1.value_or(0.0);
    return s;
  }

  // Throws ConfigError naming the first key the subcommand needs but lacks.
  void require_for(Subcommand cmd) const {
    if (cmd == Subcommand::eig) return;
    if (!f) throw ConfigError("missing key", "f");
    if (cmd == Subcommand::geometry) return;
    const char* needed[] = {"theta", "mu", "h", "a", "c1"};
    const bool present[] = {theta.has_value(), mu.has_value(), h.has_value(), growth_a.has_value(), c1.has_value()};
    for (int i = 0; i < 5; ++i)
      if (!present[i]) throw ConfigError(std::string("missing key '") + needed[i] + "' in [hypotheses]", needed[i]);
    if (bc == Boundary::neumann && !h_boundary)
      throw ConfigError("missing key 'h_boundary' in [hypotheses] (required for neumann)", "h_boundary");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct RawValue {
  std::string text;
  bool quoted = false;
  int line = 0;
};

// Strips a trailing comment outside quotes and splits off a quoted string.
inline RawValue read_value(const std::string& raw, int line) {
  std::string v = trim(raw);
  if (!v.empty() && v.front() == '"') {
    const auto close = v.find('"', 1);
    if (close == std::string::npos) throw ConfigError("unterminated quoted value", {}, line);
    const std::string rest = trim(v.substr(close + 1));
    if (!rest.empty() && rest.front() != '#') throw ConfigError("unexpected text after quoted value", {}, line);
    return {v.substr(1, close - 1), true, line};
  }
  const auto hash = v.find('#');
  if (hash != std::string::npos) v = trim(v.substr(0, hash));
  return {v, false, line};
}

class ConfigReader {
 public:
  using Section = std::map<std::string, RawValue>;

  explicit ConfigReader(std::istream& in) {
    static const std::map<std::string, std::set<std::string>> allowed = {
        {"domain", {"dimension", "x_range", "y_range", "n", "nx", "ny"}},
        {"problem", {"p", "bc", "f", "F", "g", "G"}},
        {"hypotheses",
         {"theta", "mu", "h", "h_boundary", "a", "c1", "h_scales", "h_range", "growth_range", "growth_per_decade",
          "growth_signs", "theta_range", "theta_per_decade", "theta_signs", "theta_tail", "vanishing_range",
          "vanishing_per_decade", "vanishing_signs", "vanishing_tail", "ll_range", "ll_per_decade", "ll_signs",
          "ll_tail"}},
        {"solver",
         {"tol", "max_iter", "path_nodes", "rho_grid", "a_max", "seed", "directions", "sphere_steps",
          "low_point_steps", "polish_switch", "eig_tol", "eig_max_iter"}},
    };
    std::string line;
    std::string section;
    int number = 0;
    while (std::getline(in, line)) {
      ++number;
      const std::string t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      if (t.front() == '[') {
        if (t.back() != ']') throw ConfigError("malformed section header", {}, number);
        section = trim(t.substr(1, t.size() - 2));
        if (!allowed.count(section)) throw ConfigError("unknown section [" + section + "]", section, number);
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw ConfigError("expected 'key = value'", {}, number);
      if (section.empty()) throw ConfigError("key outside of any section", {}, number);
      const std::string key = trim(t.substr(0, eq));
      if (!allowed.at(section).count(key))
        throw ConfigError("unknown key '" + key + "' in [" + section + "]", key, number);
      if (sections_[section].count(key)) throw ConfigError("duplicate key '" + key + "'", key, number);
      sections_[section][key] = read_value(t.substr(eq + 1), number);
    }
  }

  const RawValue* find(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }

  std::optional<double> number(const std::string& section, const std::string& key) const {
    const RawValue* v = find(section, key);
    if (!v) return std::nullopt;
    return to_number(*v, key);
  }

  std::optional<int> integer(const std::string& section, const std::string& key) const {
    auto d = number(section, key);
    if (!d) return std::nullopt;
    if (*d != std::floor(*d) || std::abs(*d) > 2e9)
      throw ConfigError("key '" + key + "' must be an integer", key, find(section, key)->line);
    return static_cast<int>(*d);
  }

  std::optional<std::vector<double>> list(const std::string& section, const std::string& key) const {
    const RawValue* v = find(section, key);
    if (!v) return std::nullopt;
    std::vector<double> out;
    std::stringstream ss(v->text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_number({trim(item), false, v->line}, key));
    return out;
  }

  std::optional<std::string> word(const std::string& section, const std::string& key) const {
    const RawValue* v = find(section, key);
    if (!v) return std::nullopt;
    return v->text;
  }

  std::optional<Expression> expression(const std::string& section, const std::string& key, VarSet vars) const {
    const RawValue* v = find(section, key);
    if (!v) return std::nullopt;
    if (!v->quoted) throw ConfigError("expression '" + key + "' must be a quoted string", key, v->line);
    try {
      return parse(v->text, vars);
    } catch (const ParseError& e) {
      throw ConfigError("cannot parse '" + key + "': " + e.what(), key, v->line);
    }
  }

  int line_of(const std::string& section, const std::string& key) const {
    const RawValue* v = find(section, key);
    return v ? v->line : 0;
  }

 private:
  static double to_number(const RawValue& v, const std::string& key) {
    if (v.quoted) throw ConfigError("key '" + key + "' must be a number", key, v.line);
    std::size_t used = 0;
    double d = 0.0;
    try {
      d = std::stod(v.text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v.text.size() || !std::isfinite(d))
      throw ConfigError("key '" + key + "' has invalid number '" + v.text + "'", key, v.line);
    return d;
  }

  std::map<std::string, Section> sections_;
};

}  // namespace detail

inline RunConfig parse_config(std::istream& in) {
  const detail::ConfigReader r(in);
  RunConfig c;
  auto fail = [&](const std::string& section, const std::string& key, const std::string& what) {
    throw ConfigError("invalid '" + key + "': " + what, key, r.line_of(section, key));
  };

  c.dimension = r.integer("domain", "dimension").value_or(1);
  if (c.dimension != 1 && c.dimension != 2) fail("domain", "dimension", "must be 1 or 2");
  auto range = [&](const char* key, Point& out) {
    if (auto v = r.list("domain", key)) {
      if (v->size() != 2 || !((*v)[0] < (*v)[1])) fail("domain", key, "expected 'lo, hi' with lo < hi");
      out = {(*v)[0], (*v)[1]};
    }
  };
  range("x_range", c.x_range);
  range("y_range", c.y_range);
  if (c.dimension == 1) {
    auto n = r.integer("domain", "n");
    if (!n) throw ConfigError("missing key 'n' in [domain]", "n");
    if (*n < 2) fail("domain", "n", "must be >= 2");
    c.n = *n;
  } else {
    for (const char* key : {"nx", "ny"}) {
      auto v = r.integer("domain", key);
      if (!v) throw ConfigError(std::string("missing key '") + key + "' in [domain]", key);
      if (*v < 2) fail("domain", key, "must be >= 2");
      (std::string(key) == "nx" ? c.nx : c.ny) = *v;
    }
  }

  c.p = r.number("problem", "p").value_or(2.0);
  if (!(c.p >= 2.0)) fail("problem", "p", "must be >= 2");
  if (auto bc = r.word("problem", "bc")) {
    if (*bc == "dirichlet")
      c.bc = Boundary::dirichlet;
    else if (*bc == "neumann")
      c.bc = Boundary::neumann;
    else
      fail("problem", "bc", "expected dirichlet or neumann");
  }
  c.f = r.expression("problem", "f", kNonlinearityVars);
  c.F = r.expression("problem", "F", kNonlinearityVars);
  c.g = r.expression("problem", "g", kNonlinearityVars);
  c.G = r.expression("problem", "G", kNonlinearityVars);
  if (c.F && !c.f) throw ConfigError("key 'F' given without 'f'", "F", r.line_of("problem", "F"));
  if (c.G && !c.g) throw ConfigError("key 'G' given without 'g'", "G", r.line_of("problem", "G"));
  if (c.bc == Boundary::neumann && c.f && !c.g) throw ConfigError("bc = neumann requires the boundary nonlinearity 'g'", "g");
  if (c.bc == Boundary::dirichlet && c.g) fail("problem", "g", "only used with bc = neumann");

  c.theta = r.expression("hypotheses", "theta", kSpatialVars);
  c.mu = r.expression("hypotheses", "mu", kSpatialVars);
  c.h = r.expression("hypotheses", "h", kGrowthVars);
  c.h_boundary = r.expression("hypotheses", "h_boundary", kSpatialVars);
  c.growth_a = r.expression("hypotheses", "a", kSpatialVars);
  c.c1 = r.number("hypotheses", "c1");
  if (c.c1 && *c.c1 < 0.0) fail("hypotheses", "c1", "must be >= 0");

  auto sample = [&](const std::string& prefix, SampleRange& out) {
    if (auto v = r.list("hypotheses", prefix + "_range")) {
      if (v->size() != 2 || !((*v)[0] > 0.0) || !((*v)[0] <= (*v)[1]))
        fail("hypotheses", prefix + "_range", "expected 'lo, hi' with 0 < lo <= hi");
      out.lo = (*v)[0];
      out.hi = (*v)[1];
    }
    if (auto v = r.integer("hypotheses", prefix + "_per_decade")) {
      if (*v < 1) fail("hypotheses", prefix + "_per_decade", "must be >= 1");
      out.per_decade = *v;
    }
    if (auto v = r.word("hypotheses", prefix + "_signs")) {
      if (*v == "both")
        out.signs = Signs::both;
      else if (*v == "positive")
        out.signs = Signs::positive;
      else if (*v == "negative")
        out.signs = Signs::negative;
      else
        fail("hypotheses", prefix + "_signs", "expected both, positive or negative");
    }
    if (auto v = r.number("hypotheses", prefix + "_tail")) {
      if (!(*v > 0.0)) fail("hypotheses", prefix + "_tail", "must be > 0");
      out.tail = *v;
    }
  };
  sample("growth", c.plan.growth);
  sample("theta", c.plan.theta);
  sample("vanishing", c.plan.vanishing);
  sample("ll", c.plan.landesman_lazer);
  if (auto v = r.list("hypotheses", "h_scales")) {
    if (v->empty()) fail("hypotheses", "h_scales", "must not be empty");
    for (double a : *v)
      if (!(a > 0.0)) fail("hypotheses", "h_scales", "entries must be > 0");
    c.plan.h_scales = *v;
  }
  if (auto v = r.list("hypotheses", "h_range")) {
    if (v->size() != 2 || !((*v)[0] > 0.0) || !((*v)[0] < (*v)[1]))
      fail("hypotheses", "h_range", "expected 'lo, hi' with 0 < lo < hi");
    c.plan.h_arguments.lo = (*v)[0];
    c.plan.h_arguments.hi = (*v)[1];
  }

  SolverSettings& s = c.solver;
  auto positive = [&](const char* key, double& out) {
    if (auto v = r.number("solver", key)) {
      if (!(*v > 0.0)) fail("solver", key, "must be > 0");
      out = *v;
    }
  };
  auto at_least = [&](const char* key, int lo, int& out) {
    if (auto v = r.integer("solver", key)) {
      if (*v < lo) fail("solver", key, "must be >= " + std::to_string(lo));
      out = *v;
    }
  };
  positive("tol", s.mountain_pass.tol);
  at_least("max_iter", 1, s.mountain_pass.max_iter);
  at_least("path_nodes", 3, s.mountain_pass.path_nodes);
  positive("polish_switch", s.mountain_pass.polish_switch);
  positive("a_max", s.geometry.a_max);
  at_least("directions", 0, s.geometry.directions);
  at_least("sphere_steps", 0, s.geometry.sphere_steps);
  at_least("low_point_steps", 2, s.geometry.low_point_steps);
  positive("eig_tol", s.eigen.tol);
  at_least("eig_max_iter", 1, s.eigen.max_iter);
  if (auto v = r.list("solver", "rho_grid")) {
    if (v->empty()) fail("solver", "rho_grid", "must not be empty");
    for (double rho : *v)
      if (!(rho > 0.0)) fail("solver", "rho_grid", "entries must be > 0");
    s.geometry.rho_grid = *v;
  }
  if (auto v = r.number("solver", "seed")) {
    if (*v < 0.0 || *v != std::floor(*v) || *v > 9.0e15) fail("solver", "seed", "must be a non-negative integer");
    s.seed = static_cast<std::uint64_t>(*v);
  }
  return c;
}

inline RunConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

}  // namespace plap
