#pragma once

// Energy functionals of the two resonance problems, their weak-form
// gradients, and the Cerami measure.
//
//   Dirichlet: I(u) = (1/p)||Du||_p^p - (lambda1/p)||u||_p^p - int F(x,u)
//   Neumann:   I(u) = (1/p)||Du||_p^p - int F(x,u) + int_{boundary} G(x,u)

#include "plap/expr.hpp"
#include "plap/mesh.hpp"
#include "plap/riesz.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

namespace plap {

// F(x,u) = int_0^u f(x,r) dr, either as a closed form or by adaptive
// Gauss-Kronrod quadrature of f.
class Antiderivative {
 public:
  Antiderivative() = default;
  explicit Antiderivative(Expression integrand) : integrand_(std::move(integrand)) {}
  Antiderivative(Expression integrand, Expression closed_form)
      : integrand_(std::move(integrand)), closed_form_(std::move(closed_form)) {}

  bool numeric() const { return !closed_form_.has_value(); }
  const Expression& integrand() const { return integrand_; }
  const std::optional<Expression>& closed_form() const { return closed_form_; }

  double operator()(const Point& x, double u) const {
    if (closed_form_) return (*closed_form_)(Bindings{}.set(Var::x, x[0]).set(Var::y, x[1]).set(Var::u, u));
    if (u == 0.0) return 0.0;
    auto fn = [&](double r) { return integrand_(Bindings{}.set(Var::x, x[0]).set(Var::y, x[1]).set(Var::u, r)); };
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(fn, 0.0, u, 30, 1e-10, &err);
  }

 private:
  Expression integrand_;
  std::optional<Expression> closed_form_;
};

struct ProblemSpec {
  double p = 2.0;
  Boundary bc = Boundary::dirichlet;
  Mesh mesh;
  Expression f;
  Antiderivative F;
  // Neumann boundary nonlinearity.
  std::optional<Expression> g;
  Antiderivative G;
  // Hypothesis data: theta(x), mu(x), growth h(t), boundary density h(x),
  // growth bound a(x) and c1.
  std::optional<Expression> theta;
  std::optional<Expression> mu;
  std::optional<Expression> h;
  std::optional<Expression> h_boundary;
  std::optional<Expression> growth_a;
  double c1 = 0.0;
  // First eigenvalue entering the Dirichlet functional; computed on `mesh`.
  double lambda1 = 0.0;

  // Critical Sobolev exponent np/(n-p), capped at 1e6 when p >= n.
  double critical_exponent() const {
    const double n = mesh.dimension();
    return p < n ? n * p / (n - p) : 1e6;
  }
};

inline double eval_at(const Expression& e, const Point& x, double u) {
  return e(Bindings{}.set(Var::x, x[0]).set(Var::y, x[1]).set(Var::u, u));
}

inline double eval_at(const Expression& e, const Point& x) {
  return e(Bindings{}.set(Var::x, x[0]).set(Var::y, x[1]));
}

struct ConsistencyReport {
  int checked = 0;
  int skipped = 0;  // samples outside the expression domain
  double worst_error = 0.0;
};

// Central-difference check of dF/du against f at sampled (x,u).
inline ConsistencyReport check_antiderivative(const Mesh& mesh, const Expression& f, const Antiderivative& F,
                                              std::uint64_t seed = 7, int samples = 100,
                                              double u_lo = -4.0, double u_hi = 4.0) {
  ConsistencyReport rep;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, mesh.node_count() - 1);
  std::uniform_real_distribution<double> uval(u_lo, u_hi);
  for (int s = 0; s < samples; ++s) {
    const Point& x = mesh.node(pick(rng));
    const double u = uval(rng);
    const double h = 1e-5 * std::max(1.0, std::abs(u));
    try {
      const double fd = (F(x, u + h) - F(x, u - h)) / (2.0 * h);
      const double exact = eval_at(f, x, u);
      rep.worst_error = std::max(rep.worst_error, std::abs(fd - exact) / std::max(1.0, std::abs(exact)));
      ++rep.checked;
    } catch (const DomainError&) {
      ++rep.skipped;
    }
  }
  return rep;
}

struct CeramiRecord {
  double energy = 0.0;
  double residual = 0.0;  // dual norm of I'(u)
  double measure = 0.0;   // (1 + ||u||_{1,p}) * residual
  double norm = 0.0;      // ||u||_{1,p}
};

// Validated problem with its factorized Riesz map. Immutable; every method
// is const and re-entrant.
class Functional {
 public:
  explicit Functional(ProblemSpec spec) : spec_(std::move(spec)) {
    require_p(spec_.p);
    if (spec_.mesh.node_count() == 0) throw std::invalid_argument("problem has no mesh");
    if (!spec_.f.valid()) throw std::invalid_argument("problem needs a nonlinearity f");
    if (spec_.bc == Boundary::dirichlet && !(spec_.lambda1 > 0.0))
      throw std::invalid_argument("Dirichlet problem needs lambda1 > 0 before energy evaluation");
    if (spec_.bc == Boundary::neumann && !spec_.g) throw std::invalid_argument("Neumann problem needs g");
    check_consistency(spec_.f, spec_.F, "F");
    if (spec_.g) check_consistency(*spec_.g, spec_.G, "G");
    riesz_ = std::make_shared<const RieszMap>(spec_.mesh, spec_.bc);
  }

  const ProblemSpec& spec() const { return spec_; }
  const Mesh& mesh() const { return spec_.mesh; }
  double p() const { return spec_.p; }
  const RieszMap& riesz() const { return *riesz_; }

  double energy(const Vector& u) const {
    require_admissible(u);
    const Mesh& mesh = spec_.mesh;
    const double p = spec_.p;
    double value = grad_seminorm_p(mesh, u, p) / p;
    if (spec_.bc == Boundary::dirichlet) value -= spec_.lambda1 / p * lp_norm_p(mesh, u, p);

    double bulk = 0.0;
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
      double local = 0.0;
      for (const auto& q : mesh.quadrature()) {
        const Point x = mesh.map_point(e, q.bary);
        local += q.weight * located(x, [&] { return spec_.F(x, detail::at_quad(mesh, e, q, u)); });
      }
      bulk += local * mesh.measure(e);
    }
    value -= bulk;

    if (spec_.bc == Boundary::neumann) {
      Vector G = Vector::Zero(u.size());
      for (int i : mesh.boundary_nodes()) {
        const Point& x = mesh.node(i);
        G[i] = located(x, [&] { return spec_.G(x, u[i]); });
      }
      value += boundary_integral(mesh, G);
    }
    return value;
  }

  double energy(const Field& u) const { return energy(u.values()); }

  // Component i is <I'(u), phi_i>; Dirichlet boundary rows are zero.
  Vector weak_gradient(const Vector& u) const {
    require_admissible(u);
    const Mesh& mesh = spec_.mesh;
    const double p = spec_.p;
    Vector r = grad_seminorm_p_gradient(mesh, u, p) / p;
    if (spec_.bc == Boundary::dirichlet) r -= spec_.lambda1 / p * lp_norm_p_gradient(mesh, u, p);

    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
      const auto& el = mesh.element(e);
      for (const auto& q : mesh.quadrature()) {
        const Point x = mesh.map_point(e, q.bary);
        const double fu = located(x, [&] { return eval_at(spec_.f, x, detail::at_quad(mesh, e, q, u)); });
        const double w = q.weight * mesh.measure(e) * fu;
        for (int k = 0; k < mesh.vertices_per_element(); ++k) r[el[k]] -= w * q.bary[k];
      }
    }

    if (spec_.bc == Boundary::neumann) {
      auto g_at = [&](int i) {
        const Point& x = mesh.node(i);
        return located(x, [&] { return eval_at(*spec_.g, x, u[i]); });
      };
      if (mesh.dimension() == 1) {
        for (int i : mesh.boundary_nodes()) r[i] += g_at(i);
      } else {
        for (const auto& edge : mesh.boundary_edges()) {
          r[edge.a] += 0.5 * edge.length * g_at(edge.a);
          r[edge.b] += 0.5 * edge.length * g_at(edge.b);
        }
      }
    } else {
      zero_boundary(mesh, r);
    }
    return r;
  }

  Vector weak_gradient(const Field& u) const { return weak_gradient(u.values()); }

  double dual_norm(const Vector& r) const { return riesz_->dual_norm(r); }

  double norm(const Vector& u) const { return sobolev_norm(spec_.mesh, u, spec_.p); }

  CeramiRecord cerami_measure(const Vector& u) const {
    CeramiRecord rec;
    rec.energy = energy(u);
    rec.residual = dual_norm(weak_gradient(u));
    rec.norm = norm(u);
    rec.measure = (1.0 + rec.norm) * rec.residual;
    return rec;
  }

  CeramiRecord cerami_measure(const Field& u) const { return cerami_measure(u.values()); }

 private:
  void require_admissible(const Vector& u) const {
    if (static_cast<std::size_t>(u.size()) != spec_.mesh.node_count())
      throw std::invalid_argument("field length does not match the mesh");
    if (spec_.bc == Boundary::dirichlet)
      for (int i : spec_.mesh.boundary_nodes())
        if (u[i] != 0.0) throw std::invalid_argument("Dirichlet field is nonzero on the boundary");
  }

  template <class Fn>
  static double located(const Point& x, Fn&& fn) {
    try {
      return fn();
    } catch (const DomainError& err) {
      throw DomainError(err.subexpression(), err.argument(),
                        std::string(err.what()) + " [at x=(" + std::to_string(x[0]) + ", " +
                            std::to_string(x[1]) + ")]");
    }
  }

  void check_consistency(const Expression& f, const Antiderivative& F, const char* name) const {
    if (F.numeric()) return;
    ConsistencyReport rep = check_antiderivative(spec_.mesh, f, F);
    if (rep.checked == 0)
      throw std::invalid_argument(std::string("antiderivative ") + name + " could not be sampled in its domain");
    if (rep.worst_error > 1e-6)
      throw std::invalid_argument(std::string("antiderivative ") + name +
                                  " is inconsistent with its integrand (max relative error " +
                                  std::to_string(rep.worst_error) + ")");
  }

  ProblemSpec spec_;
  std::shared_ptr<const RieszMap> riesz_;
};

}  // namespace plap
