#pragma once

// First eigenpair of the p-Laplacian by Rayleigh-quotient minimization,
// either on the Dirichlet space or on the zero-mean Neumann subspace.

#include "plap/mesh.hpp"
#include "plap/riesz.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace plap {

struct EigenOptions {
  std::uint64_t seed = 1;
  double tol = 1e-10;  // stop once the quotient decreases by less than this
  int max_iter = 50000;
};

struct EigenPair {
  double lambda1 = 0.0;
  Field u1;
  Boundary bc = Boundary::dirichlet;
  double residual = 0.0;  // Riesz norm of the projected quotient gradient
  int iterations = 0;
  bool converged = false;
  std::string diagnostic;
};

inline double rayleigh_quotient(const Mesh& mesh, const Vector& u, double p) {
  const double denom = lp_norm_p(mesh, u, p);
  if (!(denom > 0.0)) throw std::invalid_argument("Rayleigh quotient of the zero field");
  return grad_seminorm_p(mesh, u, p) / denom;
}

inline double rayleigh_quotient(const Field& u, double p) { return rayleigh_quotient(u.mesh(), u.values(), p); }

namespace detail {

// Projection onto the admissible space and its adjoint on residuals.
class AdmissibleProjection {
 public:
  AdmissibleProjection(const Mesh& mesh, Boundary bc)
      : mesh_(mesh), bc_(bc), mean_(mean_weights(mesh)) {}

  void project(Vector& u) const {
    if (bc_ == Boundary::dirichlet)
      zero_boundary(mesh_, u);
    else
      u.array() -= mean_.dot(u);
  }

  void project_dual(Vector& g) const {
    if (bc_ == Boundary::dirichlet)
      zero_boundary(mesh_, g);
    else
      g -= mean_ * g.sum();
  }

 private:
  const Mesh& mesh_;
  Boundary bc_;
  Vector mean_;
};

inline void normalize_lp(const Mesh& mesh, Vector& u, double p) {
  const double norm = std::pow(lp_norm_p(mesh, u, p), 1.0 / p);
  if (!(norm > 0.0)) throw std::invalid_argument("cannot normalize the zero field");
  u /= norm;
}

}  // namespace detail

// Sign convention: Dirichlet eigenfunctions have positive integral. Neumann
// eigenfunctions have zero mean, so the first node whose magnitude exceeds
// 1e-3 of the maximum is made positive.
inline void normalize_sign(const Mesh& mesh, Vector& u, Boundary bc) {
  double s = 0.0;
  if (bc == Boundary::dirichlet) {
    s = mean_value(mesh, u);
  } else {
    const double cutoff = 1e-3 * u.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < u.size() && s == 0.0; ++i)
      if (std::abs(u[i]) > cutoff) s = u[i];
  }
  if (s < 0.0) u = -u;
}

inline EigenPair compute_first_eigenpair(const Mesh& mesh, double p, Boundary bc,
                                         const EigenOptions& opts = {}) {
  require_p(p);
  if (opts.tol <= 0.0 || opts.max_iter < 1) throw std::invalid_argument("eigen solver needs tol > 0, max_iter >= 1");

  const RieszMap riesz(mesh, bc);
  const detail::AdmissibleProjection proj(mesh, bc);

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  Vector u(mesh.node_count());
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = dist(rng);
  proj.project(u);
  if (u.cwiseAbs().maxCoeff() == 0.0) throw std::invalid_argument("initial eigen iterate is identically zero");
  detail::normalize_lp(mesh, u, p);

  EigenPair out;
  out.bc = bc;
  double R = rayleigh_quotient(mesh, u, p);
  double step = 1.0;
  int iter = 0;
  double residual = 0.0;

  for (; iter < opts.max_iter; ++iter) {
    const double B = lp_norm_p(mesh, u, p);
    Vector g = (grad_seminorm_p_gradient(mesh, u, p) - R * lp_norm_p_gradient(mesh, u, p)) / B;
    proj.project_dual(g);
    Vector d = riesz.apply(g);
    proj.project(d);
    const double slope = g.dot(d);
    residual = std::sqrt(std::max(slope, 0.0));
    if (!(slope > 0.0)) break;

    step = std::min(2.0 * step, 1e6);
    Vector trial;
    double R_trial = R;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, step *= 0.5) {
      trial = u - step * d;
      proj.project(trial);
      if (lp_norm_p(mesh, trial, p) <= 0.0) continue;
      R_trial = rayleigh_quotient(mesh, trial, p);
      if (R_trial <= R - 1e-4 * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    // Keep halving while the quotient still improves.
    while (step > 1e-12) {
      Vector half = u - 0.5 * step * d;
      proj.project(half);
      const double R_half = rayleigh_quotient(mesh, half, p);
      if (!(R_half < R_trial)) break;
      trial = std::move(half);
      R_trial = R_half;
      step *= 0.5;
    }

    detail::normalize_lp(mesh, trial, p);
    u = std::move(trial);
    const double decrease = R - R_trial;
    R = R_trial;
    if (decrease < opts.tol) {
      ++iter;
      out.converged = true;
      break;
    }
  }

  if (!out.converged) {
    // A failed line search at a stationary point still counts as converged.
    out.converged = residual < 1e-8 * std::max(1.0, R);
    if (!out.converged)
      out.diagnostic = "eigen solver stopped after " + std::to_string(iter) +
                       " iterations without meeting the decrease tolerance (residual " +
                       std::to_string(residual) + ")";
  }

  normalize_sign(mesh, u, bc);
  out.lambda1 = rayleigh_quotient(mesh, u, p);
  out.u1 = Field(mesh, std::move(u));
  out.residual = residual;
  out.iterations = iter;
  return out;
}

}  // namespace plap
