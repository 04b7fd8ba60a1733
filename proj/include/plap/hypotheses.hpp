#pragma once

// Sampled verification of the growth, small-u, large-u and
// Landesman-Lazer conditions on a user-supplied nonlinearity.
//
// Asymptotic limits are estimated from geometric samples. Each check reports
// evidence and returns pass, fail (with a witness) or inconclusive; none of
// them is a proof.

#include "plap/eigenpair.hpp"
#include "plap/functional.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace plap {

enum class Verdict { pass, fail, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "pass";
    case Verdict::fail:
      return "fail";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "";
}

enum class Signs { both, positive, negative };

// Geometric sample magnitudes in [lo, hi]. For limits at infinity the tail is
// the samples with magnitude >= tail; for limits at zero, <= tail. The tail
// threshold is fixed independently of the sample count so that refining the
// samples only adds evidence.
struct SampleRange {
  double lo = 10.0;
  double hi = 1e6;
  int per_decade = 1;
  Signs signs = Signs::both;
  double tail = 1e4;

  std::vector<double> magnitudes() const {
    if (!(lo > 0.0) || !(hi >= lo) || per_decade < 1) throw std::invalid_argument("invalid sample range");
    std::vector<double> out;
    const double span = std::log10(hi / lo);
    const int count = static_cast<int>(std::floor(span * per_decade + 1e-9));
    for (int k = 0; k <= count; ++k) out.push_back(lo * std::pow(10.0, static_cast<double>(k) / per_decade));
    if (out.back() < hi * (1.0 - 1e-12)) out.push_back(hi);
    return out;
  }

  std::vector<double> sign_list() const {
    switch (signs) {
      case Signs::positive:
        return {1.0};
      case Signs::negative:
        return {-1.0};
      case Signs::both:
        break;
    }
    return {1.0, -1.0};
  }
};

struct SamplePlan {
  SampleRange growth{1e-6, 1e6, 4, Signs::both, 0.0};
  SampleRange theta{1e-8, 1e-1, 1, Signs::both, 1e-5};
  SampleRange vanishing{10.0, 1e6, 1, Signs::both, 1e4};
  SampleRange landesman_lazer{10.0, 1e6, 1, Signs::both, 1e4};
  std::vector<double> h_scales{0.1, 0.5, 1.0, 2.0, 10.0};
  SampleRange h_arguments{1e2, 1e6, 1, Signs::positive, 1e4};
  double limit_slack = 0.05;
  double integral_margin = 1e-6;
};

// A concrete sample violating the clause. `point` names the sample
// coordinates ("x", "y", "u"; or "a", "b" for h-regularity); `relation` is
// the inequality between `value` and `bound` that failed.
struct Witness {
  std::map<std::string, double> point;
  double value = 0.0;
  double bound = 0.0;
  std::string relation;
};

inline Witness make_witness(const Point& x, std::optional<double> u, double value, double bound, std::string relation) {
  Witness w;
  w.point["x"] = x[0];
  w.point["y"] = x[1];
  if (u) w.point["u"] = *u;
  w.value = value;
  w.bound = bound;
  w.relation = std::move(relation);
  return w;
}

struct ClauseResult {
  std::string clause;
  Verdict verdict = Verdict::pass;
  std::map<std::string, double> evidence;
  std::vector<std::string> notes;
  std::optional<Witness> witness;
};

struct HypothesisReport {
  std::vector<ClauseResult> clauses;
  Verdict overall = Verdict::pass;
};

inline Verdict combine(Verdict a, Verdict b) {
  if (a == Verdict::fail || b == Verdict::fail) return Verdict::fail;
  if (a == Verdict::inconclusive || b == Verdict::inconclusive) return Verdict::inconclusive;
  return Verdict::pass;
}

namespace detail {

inline void downgrade(ClauseResult& r, Verdict v) { r.verdict = combine(r.verdict, v); }

inline void fail_with(ClauseResult& r, Witness w) {
  if (!r.witness) r.witness = std::move(w);
  r.verdict = Verdict::fail;
}

// Sign pattern of successive differences ignoring changes below the noise
// level; true when the sequence never turns around.
inline bool monotone(const std::vector<double>& seq) {
  int direction = 0;
  for (std::size_t i = 1; i < seq.size(); ++i) {
    const double diff = seq[i] - seq[i - 1];
    if (std::abs(diff) <= 1e-9 * std::max(1.0, std::abs(seq[i]))) continue;
    const int s = diff > 0.0 ? 1 : -1;
    if (direction != 0 && s != direction) return false;
    direction = s;
  }
  return true;
}

// Lower limit estimate of values r_j = L + C s_j + o(s_j): the minimum over
// all tail pairs of the linear extrapolation to s = 0. Adding samples only
// adds pairs, so the estimate can only decrease.
inline double extrapolated_liminf(const std::vector<double>& r, const std::vector<double>& s) {
  double est = std::numeric_limits<double>::infinity();
  if (r.size() == 1) return r.front();
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t j = i + 1; j < r.size(); ++j) {
      const double ds = s[i] - s[j];
      if (std::abs(ds) <= 1e-14 * std::max(std::abs(s[i]), std::abs(s[j]))) {
        est = std::min({est, r[i], r[j]});
        continue;
      }
      est = std::min(est, r[j] - s[j] * (r[i] - r[j]) / ds);
    }
  }
  return est;
}

// Quadrature value of integral over Omega of weight(x) * |u(x)|^p.
inline double weighted_integral(const Mesh& mesh, const Expression& weight, const Vector* u, double p) {
  double total = 0.0;
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    double local = 0.0;
    for (const auto& q : mesh.quadrature()) {
      const Point x = mesh.map_point(e, q.bary);
      const double factor = u ? std::pow(std::abs(detail::at_quad(mesh, e, q, *u)), p) : 1.0;
      local += q.weight * eval_at(weight, x) * factor;
    }
    total += local * mesh.measure(e);
  }
  return total;
}

inline std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline std::string format_range(const SampleRange& r) {
  return "|u| in [" + short_number(r.lo) + ", " + short_number(r.hi) + "]";
}

}  // namespace detail

// |f(x,u)| <= a(x) + c1 |u|^(p-1) on the sample grid (and |g| on boundary
// nodes for the Neumann problem).
inline ClauseResult check_growth(const ProblemSpec& spec, const SamplePlan& plan = {}) {
  if (!spec.growth_a) throw std::invalid_argument("growth check needs a bound function a(x)");
  if (spec.c1 < 0.0) throw std::invalid_argument("growth check needs c1 >= 0");
  ClauseResult r;
  r.clause = "growth";
  const Mesh& mesh = spec.mesh;
  const auto mags = plan.growth.magnitudes();
  double worst = -std::numeric_limits<double>::infinity();
  int samples = 0;

  auto scan = [&](const Expression& fn, const char* name, bool boundary_only) {
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
      if (boundary_only && !mesh.is_boundary(i)) continue;
      const Point& x = mesh.node(i);
      const double a = eval_at(*spec.growth_a, x);
      for (double sign : plan.growth.sign_list()) {
        for (double m : mags) {
          const double u = sign * m;
          double value;
          try {
            value = std::abs(eval_at(fn, x, u));
          } catch (const DomainError& err) {
            detail::downgrade(r, Verdict::inconclusive);
            r.notes.push_back(std::string(name) + " undefined at u=" + std::to_string(u) + ": " + err.what());
            continue;
          }
          ++samples;
          const double bound = a + spec.c1 * std::pow(std::abs(u), spec.p - 1.0);
          worst = std::max(worst, value - bound);
          if (value > bound + 1e-9) detail::fail_with(r, make_witness(x, u, value, bound, std::string("|") + name + "| <= a + c1|u|^(p-1)"));
        }
      }
    }
  };
  scan(spec.f, "f", false);
  if (spec.bc == Boundary::neumann && spec.g) scan(*spec.g, "g", true);
  r.evidence["samples"] = samples;
  r.evidence["max_excess"] = worst;
  r.evidence["u_min"] = plan.growth.lo;
  r.evidence["u_max"] = plan.growth.hi;
  return r;
}

// limsup_{u->0} pF(x,u)/|u|^p <= theta(x) with theta <= 0 (Dirichlet) or
// theta <= lambda1 (Neumann), plus the eigenfunction-weighted integral
// condition and, for Neumann, G(x,u)/|u|^p -> 0.
inline ClauseResult check_theta_limsup(const ProblemSpec& spec, const EigenPair& eigen, const SamplePlan& plan = {}) {
  if (!spec.theta) throw std::invalid_argument("theta check needs theta(x)");
  ClauseResult r;
  r.clause = "theta_limsup";
  const Mesh& mesh = spec.mesh;
  const double p = spec.p;
  auto mags = plan.theta.magnitudes();
  std::sort(mags.begin(), mags.end(), std::greater<>());  // toward zero
  const double theta_cap = spec.bc == Boundary::dirichlet ? 0.0 : eigen.lambda1;

  double worst_gap = -std::numeric_limits<double>::infinity();
  double min_est = std::numeric_limits<double>::infinity();
  double max_est = -std::numeric_limits<double>::infinity();

  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    const Point& x = mesh.node(i);
    const double theta = eval_at(*spec.theta, x);
    if (theta > theta_cap + 1e-12)
      detail::fail_with(r, make_witness(x, std::nullopt, theta, theta_cap, spec.bc == Boundary::dirichlet ? "theta(x) <= 0" : "theta(x) <= lambda1"));

    double est = -std::numeric_limits<double>::infinity();
    double est_u = 0.0;
    for (double sign : plan.theta.sign_list()) {
      std::vector<double> tail;
      for (double m : mags) {
        const double u = sign * m;
        double ratio;
        try {
          ratio = p * spec.F(x, u) / std::pow(m, p);
        } catch (const DomainError& err) {
          detail::downgrade(r, Verdict::inconclusive);
          r.notes.push_back("F undefined at u=" + std::to_string(u) + ": " + err.what());
          continue;
        }
        if (m > plan.theta.tail) continue;
        tail.push_back(ratio);
        if (ratio > est) {
          est = ratio;
          est_u = u;
        }
      }
      if (!detail::monotone(tail)) {
        detail::downgrade(r, Verdict::inconclusive);
        r.notes.push_back("oscillatory small-u samples of pF/|u|^p at x=(" + std::to_string(x[0]) + ", " +
                          std::to_string(x[1]) + ")");
      }
    }
    if (!std::isfinite(est)) continue;
    min_est = std::min(min_est, est);
    max_est = std::max(max_est, est);
    worst_gap = std::max(worst_gap, est - theta);
    if (est > theta + plan.limit_slack)
      detail::fail_with(r, make_witness(x, est_u, est, theta + plan.limit_slack, "limsup pF/|u|^p <= theta(x)"));
  }
  r.evidence["limit_estimate_min"] = min_est;
  r.evidence["limit_estimate_max"] = max_est;
  r.evidence["max_excess_over_theta"] = worst_gap;

  if (spec.bc == Boundary::dirichlet) {
    const double integral = detail::weighted_integral(mesh, *spec.theta, &eigen.u1.values(), p);
    r.evidence["theta_weighted_integral"] = integral;
    if (!(integral < -plan.integral_margin))
      detail::fail_with(r, {{}, integral, -plan.integral_margin, "int theta |u1|^p < 0"});
  } else {
    ProblemSpec shifted = spec;
    const double lambda = eigen.lambda1;
    const double integral = lambda * lp_norm_p(mesh, eigen.u1.values(), p) -
                            detail::weighted_integral(mesh, *spec.theta, &eigen.u1.values(), p);
    r.evidence["gap_weighted_integral"] = integral;
    if (!(integral > plan.integral_margin))
      detail::fail_with(r, {{}, integral, plan.integral_margin, "int (lambda1 - theta)|w|^p > 0"});

    double g_max = 0.0;
    for (int i : mesh.boundary_nodes()) {
      const Point& x = mesh.node(i);
      for (double sign : plan.theta.sign_list()) {
        for (double m : mags) {
          if (m > plan.theta.tail) continue;
          try {
            const double ratio = std::abs(spec.G(x, sign * m)) / std::pow(m, p);
            g_max = std::max(g_max, ratio);
            if (ratio > plan.limit_slack)
              detail::fail_with(r, make_witness(x, sign * m, ratio, plan.limit_slack, "|G|/|u|^p -> 0 as u -> 0"));
          } catch (const DomainError& err) {
            detail::downgrade(r, Verdict::inconclusive);
            r.notes.push_back(std::string("G undefined near 0: ") + err.what());
          }
        }
      }
    }
    r.evidence["boundary_ratio_max"] = g_max;
  }
  return r;
}

// lim_{|u|->inf} F(x,u)/|u|^p = 0 (and G on boundary nodes for Neumann).
inline ClauseResult check_subcritical_vanishing(const ProblemSpec& spec, const SamplePlan& plan = {}) {
  ClauseResult r;
  r.clause = "subcritical_vanishing";
  const Mesh& mesh = spec.mesh;
  const double p = spec.p;
  const auto mags = plan.vanishing.magnitudes();
  double final_max = 0.0;

  auto scan = [&](const Antiderivative& F, const char* name, bool boundary_only) {
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
      if (boundary_only && !mesh.is_boundary(i)) continue;
      const Point& x = mesh.node(i);
      for (double sign : plan.vanishing.sign_list()) {
        std::vector<double> tail;
        std::vector<double> tail_u;
        for (double m : mags) {
          try {
            const double ratio = std::abs(F(x, sign * m)) / std::pow(m, p);
            if (m >= plan.vanishing.tail) {
              tail.push_back(ratio);
              tail_u.push_back(sign * m);
            }
          } catch (const DomainError& err) {
            detail::downgrade(r, Verdict::inconclusive);
            r.notes.push_back(std::string(name) + " undefined at u=" + std::to_string(sign * m) + " (" +
                              detail::format_range(plan.vanishing) + "): " + err.what());
          }
        }
        if (tail.empty()) continue;
        final_max = std::max(final_max, tail.back());
        for (std::size_t j = 1; j < tail.size(); ++j) {
          if (tail[j] > tail[j - 1] + 1e-12 * std::max(1.0, tail[j - 1]))
            detail::fail_with(r, make_witness(x, tail_u[j], tail[j], tail[j - 1], std::string("|") + name + "|/|u|^p decreasing in the tail"));
        }
        if (!(tail.back() < 0.01))
          detail::fail_with(r, make_witness(x, tail_u.back(), tail.back(), 0.01, std::string("|") + name + "|/|u|^p -> 0"));
      }
    }
  };
  scan(spec.F, "F", false);
  if (spec.bc == Boundary::neumann) scan(spec.G, "G", true);
  r.evidence["final_ratio_max"] = final_max;
  return r;
}

// liminf h(a b)/h(b) >= 1 for a in the scale set as b -> inf, and h(b) -> inf.
// The witness reports (a, b) in the (x[0], u) slots.
inline ClauseResult check_h_regularity(const Expression& h, const SamplePlan& plan = {}) {
  ClauseResult r;
  r.clause = "h_regularity";
  auto hval = [&](double t) { return h(Bindings{}.set(Var::t, t)); };
  const auto bs = plan.h_arguments.magnitudes();
  double worst = std::numeric_limits<double>::infinity();

  for (double a : plan.h_scales) {
    std::vector<double> ratios, inv_h;
    double last_b = 0.0;
    bool usable = true;
    for (double b : bs) {
      double hb, hab;
      try {
        hb = hval(b);
        hab = hval(a * b);
      } catch (const DomainError& err) {
        r.notes.push_back(std::string("h undefined: ") + err.what());
        usable = false;
        break;
      }
      if (!(hb > 0.0) || !(hab > 0.0)) {
        r.notes.push_back("h not positive at b=" + std::to_string(b) + ", a=" + std::to_string(a));
        usable = false;
        break;
      }
      if (b < plan.h_arguments.tail) continue;
      ratios.push_back(hab / hb);
      inv_h.push_back(1.0 / hb);
      last_b = b;
    }
    if (!usable || ratios.empty()) {
      detail::downgrade(r, Verdict::inconclusive);
      continue;
    }
    const double est = detail::extrapolated_liminf(ratios, inv_h);
    r.evidence["liminf_estimate_a=" + detail::short_number(a)] = est;
    r.evidence["tail_ratio_a=" + detail::short_number(a)] = ratios.back();
    worst = std::min(worst, est);
    if (est < 1.0 - plan.limit_slack)
      detail::fail_with(r, {{{"a", a}, {"b", last_b}}, est, 1.0 - plan.limit_slack, "liminf h(ab)/h(b) >= 1"});
  }
  r.evidence["liminf_estimate_min"] = worst;

  try {
    const double h_lo = hval(bs.front());
    const double h_hi = hval(bs.back());
    r.evidence["h_first"] = h_lo;
    r.evidence["h_last"] = h_hi;
    if (!(h_hi > h_lo + 1.0)) detail::fail_with(r, {{{"b", bs.back()}}, h_hi, h_lo + 1.0, "h(b) -> infinity"});
  } catch (const DomainError& err) {
    detail::downgrade(r, Verdict::inconclusive);
    r.notes.push_back(err.what());
  }
  return r;
}

// liminf_{|u|->inf} (pF - f u)/h(|u|) >= mu(x) with int mu > 0 (Dirichlet);
// for Neumann additionally liminf -(pG - g u)/h(|u|) >= -h_b(x) on the
// boundary and int mu > int_{boundary} h_b.
inline ClauseResult check_landesman_lazer(const ProblemSpec& spec, const SamplePlan& plan = {}) {
  if (!spec.mu || !spec.h) throw std::invalid_argument("Landesman-Lazer check needs mu(x) and h(t)");
  if (spec.bc == Boundary::neumann && !spec.h_boundary)
    throw std::invalid_argument("Neumann Landesman-Lazer check needs the boundary density h_boundary(x)");
  ClauseResult r;
  r.clause = "landesman_lazer";
  const Mesh& mesh = spec.mesh;
  const double p = spec.p;
  const auto mags = plan.landesman_lazer.magnitudes();
  const Expression& h = *spec.h;
  auto hval = [&](double t) { return h(Bindings{}.set(Var::t, t)); };

  // Returns the liminf estimate of sigma * (pF - f u)/h(|u|) at x.
  auto estimate = [&](const Point& x, const Expression& f, const Antiderivative& F, double sigma,
                      double& at_u) -> std::optional<double> {
    double best = std::numeric_limits<double>::infinity();
    bool any = false;
    for (double sign : plan.landesman_lazer.sign_list()) {
      std::vector<double> ratios, inv_h;
      for (double m : mags) {
        if (m < plan.landesman_lazer.tail) continue;
        const double u = sign * m;
        try {
          const double hu = hval(m);
          if (!(hu > 0.0)) throw DomainError(h.source(), m, "growth function not positive");
          ratios.push_back(sigma * (p * F(x, u) - eval_at(f, x, u) * u) / hu);
          inv_h.push_back(1.0 / hu);
        } catch (const DomainError& err) {
          detail::downgrade(r, Verdict::inconclusive);
          r.notes.push_back("undefined at u=" + std::to_string(u) + " (" +
                            detail::format_range(plan.landesman_lazer) + "): " + err.what());
        }
      }
      if (ratios.empty()) continue;
      const double est = detail::extrapolated_liminf(ratios, inv_h);
      if (est < best) {
        best = est;
        at_u = sign * mags.back();
      }
      any = true;
    }
    if (!any) return std::nullopt;
    return best;
  };

  double min_est = std::numeric_limits<double>::infinity();
  double max_est = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    const Point& x = mesh.node(i);
    double u_at = 0.0;
    auto est = estimate(x, spec.f, spec.F, 1.0, u_at);
    if (!est) continue;
    min_est = std::min(min_est, *est);
    max_est = std::max(max_est, *est);
    const double mu = eval_at(*spec.mu, x);
    if (*est < mu - plan.limit_slack) detail::fail_with(r, make_witness(x, u_at, *est, mu - plan.limit_slack, "liminf (pF - fu)/h(|u|) >= mu(x)"));
  }
  r.evidence["limit_estimate_min"] = min_est;
  r.evidence["limit_estimate_max"] = max_est;

  const double mu_integral = detail::weighted_integral(mesh, *spec.mu, nullptr, p);
  r.evidence["mu_integral"] = mu_integral;
  double rhs = 0.0;
  if (spec.bc == Boundary::neumann) {
    Vector density = Vector::Zero(mesh.node_count());
    for (int i : mesh.boundary_nodes()) density[i] = eval_at(*spec.h_boundary, mesh.node(i));
    rhs = boundary_integral(mesh, density);
    r.evidence["boundary_density_integral"] = rhs;

    double b_min = std::numeric_limits<double>::infinity();
    for (int i : mesh.boundary_nodes()) {
      const Point& x = mesh.node(i);
      double u_at = 0.0;
      auto est = estimate(x, *spec.g, spec.G, -1.0, u_at);
      if (!est) continue;
      b_min = std::min(b_min, *est);
      const double bound = -density[i];
      if (*est < bound - plan.limit_slack)
        detail::fail_with(r, make_witness(x, u_at, *est, bound - plan.limit_slack, "liminf -(pG - gu)/h(|u|) >= -h_boundary(x)"));
    }
    r.evidence["boundary_limit_estimate_min"] = b_min;
  }
  if (!(mu_integral > rhs + plan.integral_margin))
    detail::fail_with(r, {{}, mu_integral, rhs + plan.integral_margin,
                          spec.bc == Boundary::dirichlet ? "int mu > 0" : "int mu > int_boundary h_boundary"});
  return r;
}

inline HypothesisReport check_all(const ProblemSpec& spec, const EigenPair& eigen, const SamplePlan& plan = {}) {
  HypothesisReport rep;
  rep.clauses.push_back(check_growth(spec, plan));
  rep.clauses.push_back(check_theta_limsup(spec, eigen, plan));
  rep.clauses.push_back(check_subcritical_vanishing(spec, plan));
  if (!spec.h) throw std::invalid_argument("hypothesis check needs the growth function h(t)");
  rep.clauses.push_back(check_h_regularity(*spec.h, plan));
  rep.clauses.push_back(check_landesman_lazer(spec, plan));
  rep.overall = Verdict::pass;
  for (const auto& c : rep.clauses) rep.overall = combine(rep.overall, c.verdict);
  return rep;
}

}  // namespace plap
