#pragma once

// Mountain-pass geometry certificates and a path-deformation solver for
// nontrivial critical points of the energy functional.

#include "plap/eigenpair.hpp"
#include "plap/functional.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace plap {

class MountainPassError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RayScanEntry {
  double scale = 0.0;
  double energy = 0.0;
  double norm = 0.0;
};

struct LowPoint {
  bool found = false;
  Field e;
  double scale = 0.0;
  double energy = 0.0;
  double norm = 0.0;
  std::vector<RayScanEntry> trace;
  std::string diagnostic;
};

struct SphereEstimate {
  double rho = 0.0;
  double min_energy = 0.0;
  int samples = 0;
};

struct GeometryCertificate {
  bool certified = false;
  double rho = 0.0;
  double a_estimate = 0.0;
  Field e;
  double e_energy = 0.0;
  double e_norm = 0.0;
  int sphere_samples = 0;
  std::vector<SphereEstimate> sphere_scan;
  std::vector<RayScanEntry> ray_trace;
  std::string diagnostic;
};

struct GeometryOptions {
  std::vector<double> rho_grid{0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
  int directions = 16;
  int sphere_steps = 30;
  std::uint64_t seed = 1;
  double a_max = 1e4;
  int low_point_steps = 200;
  double margin = 1e-12;
};

namespace detail {

inline void project_admissible(const Functional& fn, const Vector& mean, Vector& u, bool zero_mean) {
  if (fn.spec().bc == Boundary::dirichlet)
    zero_boundary(fn.mesh(), u);
  else if (zero_mean)
    u.array() -= mean.dot(u);
}

inline void project_admissible_dual(const Functional& fn, const Vector& mean, Vector& g, bool zero_mean) {
  if (fn.spec().bc == Boundary::dirichlet)
    zero_boundary(fn.mesh(), g);
  else if (zero_mean)
    g -= mean * g.sum();
}

// Energy below zero by more than round-off of the quadratic part. At exact
// resonance with F = 0 the ray energy is zero up to rounding, which must not
// count as a low point.
inline bool strictly_low(const Functional& fn, const Vector& v, double energy) {
  const double scale = std::max(1.0, grad_seminorm_p(fn.mesh(), v, fn.p()) / fn.p());
  return energy <= -1e-10 * scale;
}

}  // namespace detail

// Scans the ray a|u1| (Dirichlet) or the constants a (Neumann) for a in
// [1, a_max] geometrically, both signs, and returns the first field with
// negative energy and norm above rho.
inline LowPoint find_low_point(const Functional& fn, const EigenPair* eigen, double a_max, int steps,
                               double rho = 0.0) {
  if (!(a_max > 0.0) || steps < 1) throw std::invalid_argument("find_low_point needs a_max > 0 and steps >= 1");
  const Mesh& mesh = fn.mesh();
  Vector direction;
  if (fn.spec().bc == Boundary::dirichlet) {
    if (eigen == nullptr) throw std::invalid_argument("Dirichlet low-point scan needs the first eigenfunction");
    direction = eigen->u1.values().cwiseAbs();
  } else {
    direction = Vector::Ones(mesh.node_count());
  }

  LowPoint out;
  for (int k = 0; k < steps; ++k) {
    const double a = steps == 1 ? a_max : std::pow(a_max, static_cast<double>(k) / (steps - 1));
    for (double sign : {1.0, -1.0}) {
      Vector v = sign * a * direction;
      double energy = 0.0;
      try {
        energy = fn.energy(v);
      } catch (const DomainError&) {
        continue;
      }
      const double norm = fn.norm(v);
      out.trace.push_back({sign * a, energy, norm});
      if (norm > rho && detail::strictly_low(fn, v, energy)) {
        out.found = true;
        out.e = Field(mesh, std::move(v));
        out.scale = sign * a;
        out.energy = energy;
        out.norm = norm;
        return out;
      }
    }
  }
  out.diagnostic = "no field with negative energy and norm > " + std::to_string(rho) +
                   " found on the scanned ray up to a = " + std::to_string(a_max);
  return out;
}

namespace detail {

// Projected descent on the sphere ||u||_{1,p} = rho with a radial retraction.
// Returns the lowest energy visited.
inline double minimize_on_sphere(const Functional& fn, const Vector& mean, Vector u, double rho, int steps) {
  const double p = fn.p();
  const bool zero_mean = fn.spec().bc == Boundary::neumann;
  auto retract = [&](Vector v) {
    project_admissible(fn, mean, v, zero_mean);
    const double n = fn.norm(v);
    return Vector(v * (rho / n));
  };
  u = retract(u);
  double energy = fn.energy(u);
  double best = energy;
  double step = 1.0;
  for (int it = 0; it < steps; ++it) {
    Vector g = fn.weak_gradient(u);
    project_admissible_dual(fn, mean, g, zero_mean);
    Vector d = fn.riesz().apply(g);
    project_admissible(fn, mean, d, zero_mean);
    Vector n = sobolev_norm_p_gradient(fn.mesh(), u, p);
    project_admissible_dual(fn, mean, n, zero_mean);
    Vector kn = fn.riesz().apply(n);
    project_admissible(fn, mean, kn, zero_mean);
    const double nkn = n.dot(kn);
    if (nkn > 0.0) d -= (n.dot(d) / nkn) * kn;
    const double slope = g.dot(d);
    if (!(slope > 0.0)) break;

    step *= 2.0;
    bool accepted = false;
    for (int k = 0; k < 40; ++k, step *= 0.5) {
      Vector trial = retract(u - step * d);
      const double e_trial = fn.energy(trial);
      if (e_trial <= energy - 1e-4 * step * slope) {
        u = std::move(trial);
        energy = e_trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    best = std::min(best, energy);
  }
  return best;
}

}  // namespace detail

// Sampled estimate of min I on spheres of radius rho; picks the largest rho
// with a positive minimum and pairs it with a low point beyond the sphere.
inline GeometryCertificate certify_ring(const Functional& fn, const EigenPair& eigen, const GeometryOptions& opts = {}) {
  if (opts.rho_grid.empty()) throw std::invalid_argument("certify_ring needs a non-empty rho grid");
  for (double r : opts.rho_grid)
    if (!(r > 0.0)) throw std::invalid_argument("rho grid entries must be positive");
  if (opts.directions < 0 || opts.sphere_steps < 0) throw std::invalid_argument("negative sample counts");

  const Mesh& mesh = fn.mesh();
  const Vector mean = mean_weights(mesh);
  const bool zero_mean = fn.spec().bc == Boundary::neumann;

  std::vector<Vector> starts;
  starts.push_back(eigen.u1.values());
  starts.push_back(-eigen.u1.values());
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int k = 0; k < opts.directions; ++k) {
    Vector v(mesh.node_count());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = dist(rng);
    detail::project_admissible(fn, mean, v, zero_mean);
    starts.push_back(std::move(v));
  }

  GeometryCertificate cert;
  std::vector<double> grid = opts.rho_grid;
  std::sort(grid.begin(), grid.end());
  for (double rho : grid) {
    SphereEstimate est{rho, std::numeric_limits<double>::infinity(), 0};
    for (const Vector& s : starts) {
      try {
        est.min_energy = std::min(est.min_energy, detail::minimize_on_sphere(fn, mean, s, rho, opts.sphere_steps));
        ++est.samples;
      } catch (const DomainError&) {
      }
    }
    cert.sphere_samples += est.samples;
    cert.sphere_scan.push_back(est);
    if (est.samples > 0 && est.min_energy > opts.margin) {
      cert.rho = rho;
      cert.a_estimate = est.min_energy;
    }
  }

  if (!(cert.rho > 0.0)) {
    cert.diagnostic = "no sphere radius with positive sampled minimum; best (rho, min):";
    for (const auto& est : cert.sphere_scan)
      cert.diagnostic += " (" + std::to_string(est.rho) + ", " + std::to_string(est.min_energy) + ")";
    return cert;
  }

  LowPoint low = find_low_point(fn, &eigen, opts.a_max, opts.low_point_steps, cert.rho);
  cert.ray_trace = low.trace;
  if (!low.found) {
    cert.diagnostic = low.diagnostic;
    return cert;
  }
  cert.e = low.e;
  cert.e_energy = low.energy;
  cert.e_norm = low.norm;
  cert.certified = true;
  return cert;
}

struct MountainPassOptions {
  int path_nodes = 21;
  double tol = 1e-6;
  int max_iter = 20000;
  // Path deformation hands over to the residual polish once the max-node
  // residual drops below this or the path stops improving.
  double polish_switch = 1e-3;
  int stall_window = 50;
  int polish_max_iter = 100;
};

struct MountainPassResult {
  Field u_star;
  double level = 0.0;
  double residual = 0.0;
  std::vector<CeramiRecord> history;
  int path_nodes = 0;
  int iterations = 0;
  int polish_iterations = 0;
  double norm = 0.0;
  double max_history_norm = 0.0;
  bool converged = false;
  bool ps_violation = false;
  std::string diagnostic;
};

namespace detail {

// Finite-difference Jacobian of the weak gradient, using a distance-2
// coloring of the stiffness pattern so that each color costs two gradient
// evaluations.
class GradientJacobian {
 public:
  explicit GradientJacobian(const Functional& fn) : fn_(fn) {
    const SparseMatrix& K = fn.riesz().matrix();
    const Eigen::Index n = K.rows();
    SparseMatrix pattern = stiffness_matrix(fn.mesh());
    neighbors_.assign(n, {});
    for (int k = 0; k < pattern.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(pattern, k); it; ++it) neighbors_[it.col()].push_back(static_cast<int>(it.row()));

    fixed_.assign(n, 0);
    if (fn.spec().bc == Boundary::dirichlet)
      for (int i : fn.mesh().boundary_nodes()) fixed_[i] = 1;

    color_.assign(n, -1);
    std::vector<int> stamp(n + 1, -1);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (fixed_[i]) continue;
      for (int a : neighbors_[i])
        for (int b : neighbors_[a])
          if (color_[b] >= 0) stamp[color_[b]] = static_cast<int>(i);
      int c = 0;
      while (stamp[c] == static_cast<int>(i)) ++c;
      color_[i] = c;
      colors_ = std::max(colors_, c + 1);
    }
  }

  SparseMatrix evaluate(const Vector& u) const {
    const Eigen::Index n = u.size();
    std::vector<Eigen::Triplet<double>> trips;
    const double h = 1e-6 * std::max(1.0, u.cwiseAbs().maxCoeff());
    for (int c = 0; c < colors_; ++c) {
      Vector shift = Vector::Zero(n);
      for (Eigen::Index i = 0; i < n; ++i)
        if (color_[i] == c) shift[i] = h;
      const Vector diff = (fn_.weak_gradient(u + shift) - fn_.weak_gradient(u - shift)) / (2.0 * h);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (color_[i] != c) continue;
        for (int r : neighbors_[i])
          if (!fixed_[r]) trips.emplace_back(r, static_cast<int>(i), diff[r]);
      }
    }
    for (Eigen::Index i = 0; i < n; ++i)
      if (fixed_[i]) trips.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
    SparseMatrix J(n, n);
    J.setFromTriplets(trips.begin(), trips.end());
    return J;
  }

  int colors() const { return colors_; }

 private:
  const Functional& fn_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<char> fixed_;
  std::vector<int> color_;
  int colors_ = 0;
};

inline std::size_t max_node(const std::vector<double>& energies) {
  std::size_t k = 1;
  for (std::size_t j = 2; j + 1 < energies.size(); ++j)
    if (energies[j] > energies[k] + 1e-14) k = j;
  return k;
}

// Path polyline whose highest point is kept as a node.
struct Path {
  std::vector<Vector> nodes;
  std::vector<double> energies;
  std::size_t peak = 1;
};

// Resamples the polyline `pts` at `count + 1` points of equal ||.||_{1,p}
// arc length, endpoints included.
inline std::vector<Vector> resample(const Functional& fn, const std::vector<Vector>& pts, std::size_t count) {
  std::vector<double> arc(pts.size(), 0.0);
  for (std::size_t j = 1; j < pts.size(); ++j) arc[j] = arc[j - 1] + fn.norm(pts[j] - pts[j - 1]);
  const double total = arc.back();
  std::vector<Vector> out;
  out.push_back(pts.front());
  std::size_t seg = 0;
  for (std::size_t j = 1; j < count; ++j) {
    const double target = total * static_cast<double>(j) / static_cast<double>(count);
    while (seg + 2 < pts.size() && arc[seg + 1] < target) ++seg;
    const double len = arc[seg + 1] - arc[seg];
    const double t = len > 0.0 ? std::clamp((target - arc[seg]) / len, 0.0, 1.0) : 0.0;
    out.push_back((1.0 - t) * pts[seg] + t * pts[seg + 1]);
  }
  out.push_back(pts.back());
  return out;
}

// Golden-section maximum of the energy on the segment a -> b.
inline std::pair<double, double> segment_max(const Functional& fn, const Vector& a, const Vector& b) {
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  auto energy_at = [&](double t) { return fn.energy(Vector((1.0 - t) * a + t * b)); };
  double lo = 0.0, hi = 1.0;
  double t1 = hi - ratio * (hi - lo), t2 = lo + ratio * (hi - lo);
  double e1 = energy_at(t1), e2 = energy_at(t2);
  for (int it = 0; it < 48 && hi - lo > 1e-10; ++it) {
    if (e1 < e2) {
      lo = t1;
      t1 = t2;
      e1 = e2;
      t2 = lo + ratio * (hi - lo);
      e2 = energy_at(t2);
    } else {
      hi = t2;
      t2 = t1;
      e2 = e1;
      t1 = hi - ratio * (hi - lo);
      e1 = energy_at(t1);
    }
  }
  return e1 >= e2 ? std::pair{t1, e1} : std::pair{t2, e2};
}

// Locates the highest point of the polyline near its highest node, inserts
// it, and redistributes m nodes with that point pinned. Each side gets a
// share of nodes proportional to its arc length.
inline Path settle(const Functional& fn, std::vector<Vector> nodes, std::size_t m) {
  std::vector<double> energies(nodes.size());
  for (std::size_t j = 0; j < nodes.size(); ++j) energies[j] = fn.energy(nodes[j]);
  std::size_t k = max_node(energies);

  Vector top = nodes[k];
  double top_energy = energies[k];
  std::size_t insert_at = k;  // index of the peak in the augmented polyline
  bool inserted = false;
  for (std::size_t side : {k - 1, k}) {
    auto [t, value] = segment_max(fn, nodes[side], nodes[side + 1]);
    if (value > top_energy && t > 0.0 && t < 1.0) {
      top_energy = value;
      top = (1.0 - t) * nodes[side] + t * nodes[side + 1];
      insert_at = side + 1;
      inserted = true;
    }
  }
  if (inserted) nodes.insert(nodes.begin() + static_cast<std::ptrdiff_t>(insert_at), top);

  std::vector<Vector> left(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(insert_at) + 1);
  std::vector<Vector> right(nodes.begin() + static_cast<std::ptrdiff_t>(insert_at), nodes.end());
  double len_left = 0.0, len_right = 0.0;
  for (std::size_t j = 1; j < left.size(); ++j) len_left += fn.norm(left[j] - left[j - 1]);
  for (std::size_t j = 1; j < right.size(); ++j) len_right += fn.norm(right[j] - right[j - 1]);
  const double share = len_left / std::max(len_left + len_right, 1e-300);
  const auto segments = static_cast<long>(m - 1);
  const std::size_t count_left =
      static_cast<std::size_t>(std::clamp(std::lround(share * static_cast<double>(segments)), 1L, segments - 1));

  Path out;
  out.nodes = resample(fn, left, count_left);
  std::vector<Vector> tail = resample(fn, right, m - 1 - count_left);
  out.nodes.insert(out.nodes.end(), tail.begin() + 1, tail.end());
  out.energies.resize(m);
  for (std::size_t j = 0; j < m; ++j) out.energies[j] = j == count_left ? top_energy : fn.energy(out.nodes[j]);
  out.peak = max_node(out.energies);
  return out;
}

}  // namespace detail

inline MountainPassResult mountain_pass(const Functional& fn, const Field& e, const MountainPassOptions& opts = {},
                                        const GeometryCertificate* cert = nullptr) {
  if (opts.path_nodes < 3) throw std::invalid_argument("mountain pass needs at least 3 path nodes");
  if (!(opts.tol > 0.0) || opts.max_iter < 1) throw std::invalid_argument("mountain pass needs tol > 0, max_iter >= 1");
  const Vector& end = e.values();
  if (end.cwiseAbs().maxCoeff() == 0.0) throw std::invalid_argument("mountain pass endpoint e must be nonzero");
  if (fn.energy(end) > 0.0) throw std::invalid_argument("mountain pass endpoint must satisfy I(e) <= 0");

  const Mesh& mesh = fn.mesh();
  const std::size_t m = static_cast<std::size_t>(opts.path_nodes);
  std::vector<Vector> line(m);
  for (std::size_t j = 0; j < m; ++j) line[j] = (static_cast<double>(j) / static_cast<double>(m - 1)) * end;
  detail::Path path = detail::settle(fn, std::move(line), m);

  MountainPassResult out;
  out.path_nodes = opts.path_nodes;

  auto record = [&](const Vector& u, const Vector& g) {
    CeramiRecord rec;
    rec.energy = fn.energy(u);
    rec.residual = fn.dual_norm(g);
    rec.norm = fn.norm(u);
    rec.measure = (1.0 + rec.norm) * rec.residual;
    out.history.push_back(rec);
    out.max_history_norm = std::max(out.max_history_norm, rec.norm);
    return rec;
  };

  // Path deformation: lower the highest point of the path, then settle the
  // path again. A move is kept only if the new highest point is not higher.
  double step = 1.0;
  double best_level = 0.0;
  int since_improved = 0;
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const std::size_t k = path.peak;
    const Vector& u = path.nodes[k];
    if (fn.norm(u) < 1e-8) throw MountainPassError("degenerate path: the highest node collapsed onto 0");
    const Vector g = fn.weak_gradient(u);
    const CeramiRecord rec = record(u, g);
    if (rec.residual <= std::max(opts.tol, opts.polish_switch)) break;
    if (iter == 0 || rec.energy < best_level - 1e-12 * std::max(1.0, std::abs(best_level))) {
      best_level = rec.energy;
      since_improved = 0;
    } else if (++since_improved >= opts.stall_window) {
      break;
    }

    const Vector d = fn.riesz().apply(g);
    const double slope = g.dot(d);
    // Moves longer than half the gap to either neighbour let the polyline
    // tunnel under the ridge.
    const double gap = std::min(fn.norm(u - path.nodes[k - 1]), fn.norm(path.nodes[k + 1] - u));
    step = std::min(2.0 * step, 0.5 * gap / std::max(fn.norm(d), 1e-300));
    bool accepted = false;
    for (int t = 0; t < 40 && !accepted; ++t, step *= 0.5) {
      Vector trial = u - step * d;
      double e_trial;
      try {
        e_trial = fn.energy(trial);
      } catch (const DomainError&) {
        continue;
      }
      if (e_trial > path.energies[k] - 1e-4 * step * slope) continue;
      std::vector<Vector> nodes = path.nodes;
      nodes[k] = std::move(trial);
      detail::Path next = detail::settle(fn, std::move(nodes), m);
      if (next.energies[next.peak] <= path.energies[k] + 1e-12) {
        path = std::move(next);
        accepted = true;
      }
    }
    if (!accepted) break;
  }

  // Polish: damped Newton on I'(u) = 0 with the Riesz residual as merit.
  const detail::GradientJacobian jacobian(fn);
  Vector u = path.nodes[path.peak];
  Vector g = fn.weak_gradient(u);
  double residual = fn.dual_norm(g);
  int polish = 0;
  while (residual > opts.tol && polish < opts.polish_max_iter) {
    SparseMatrix J = jacobian.evaluate(u);
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(J);
    if (lu.info() != Eigen::Success) break;
    Vector delta = lu.solve(-g);
    if (lu.info() != Eigen::Success || !delta.allFinite()) break;
    if (fn.spec().bc == Boundary::dirichlet) zero_boundary(mesh, delta);
    double alpha = 1.0;
    bool accepted = false;
    for (int t = 0; t < 40; ++t, alpha *= 0.5) {
      const Vector trial = u + alpha * delta;
      try {
        const Vector g_trial = fn.weak_gradient(trial);
        const double r_trial = fn.dual_norm(g_trial);
        if (r_trial <= (1.0 - 1e-4 * alpha) * residual) {
          u = trial;
          g = g_trial;
          residual = r_trial;
          accepted = true;
          break;
        }
      } catch (const DomainError&) {
      }
    }
    ++polish;
    record(u, g);
    if (!accepted) break;
  }

  out.u_star = Field(mesh, u);
  out.level = fn.energy(u);
  out.residual = residual;
  out.norm = fn.norm(u);
  out.iterations = static_cast<int>(out.history.size());
  out.polish_iterations = polish;
  out.converged = residual <= opts.tol;
  if (!out.converged) {
    out.diagnostic = "mountain pass did not reach residual " + std::to_string(opts.tol) + " (best " +
                     std::to_string(residual) + ")";
    const double first = out.history.empty() ? 0.0 : out.history.front().norm;
    out.ps_violation = out.norm > 1e3 * std::max(first, 1e-12) && out.history.back().measure > opts.tol;
    if (out.ps_violation) out.diagnostic += "; iterate norms diverge with non-vanishing Cerami measure";
  } else if (out.norm < 1e-8) {
    throw MountainPassError("degenerate path: the solver converged to the trivial critical point");
  } else if (fn.spec().bc == Boundary::dirichlet && cert != nullptr && cert->certified &&
             out.level < cert->a_estimate - opts.tol) {
    // The Neumann sphere lies in the zero-mean subspace, which a path to a
    // constant endpoint need not cross, so the ordering is Dirichlet-only.
    out.diagnostic = "level below the certified sphere minimum";
  }
  return out;
}

struct VerificationRecord {
  double residual = 0.0;
  double energy = 0.0;
  double norm = 0.0;
  bool residual_ok = false;
  bool nontrivial = false;
  bool passed = false;
};

inline VerificationRecord verify_solution(const Functional& fn, const Field& u, double tol = 1e-6,
                                          double nontrivial_threshold = 1e-3) {
  VerificationRecord rec;
  rec.residual = fn.dual_norm(fn.weak_gradient(u));
  rec.energy = fn.energy(u);
  rec.norm = fn.norm(u.values());
  rec.residual_ok = rec.residual <= tol;
  rec.nontrivial = rec.norm > nontrivial_threshold;
  rec.passed = rec.residual_ok && rec.nontrivial;
  return rec;
}

}  // namespace plap
