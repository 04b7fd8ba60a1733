#pragma once

// Piecewise-linear conforming discretization of an interval or an
// axis-aligned rectangle, with the quadrature and norms every other module
// builds on.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace plap {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Point = std::array<double, 2>;

struct BoundaryEdge {
  int a = 0;
  int b = 0;
  double length = 0.0;
};

// Quadrature point in barycentric coordinates; `weight` is the fraction of
// the element measure it carries.
struct QuadPoint {
  std::array<double, 3> bary{};
  double weight = 0.0;
};

namespace detail {

struct MeshData {
  int dim = 1;
  std::vector<Point> nodes;
  std::vector<std::array<int, 3>> elements;
  std::vector<double> measures;
  std::vector<std::array<Point, 3>> basis_grads;
  std::vector<char> on_boundary;
  std::vector<int> boundary_nodes;
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<QuadPoint> quadrature;
  double total_measure = 0.0;
  Point lower{};
  Point upper{};
};

// Two-point Gauss on segments, edge-midpoint rule on triangles: both exact
// for quadratics.
inline std::vector<QuadPoint> quadrature_rule(int dim) {
  if (dim == 1) {
    const double s = 0.5 / std::sqrt(3.0);
    return {{{0.5 + s, 0.5 - s, 0.0}, 0.5}, {{0.5 - s, 0.5 + s, 0.0}, 0.5}};
  }
  const double third = 1.0 / 3.0;
  return {{{0.5, 0.5, 0.0}, third}, {{0.0, 0.5, 0.5}, third}, {{0.5, 0.0, 0.5}, third}};
}

}  // namespace detail

// Immutable mesh handle; copies share the underlying data.
class Mesh {
 public:
  Mesh() = default;
  explicit Mesh(std::shared_ptr<const detail::MeshData> data) : data_(std::move(data)) {}

  int dimension() const { return data_->dim; }
  int vertices_per_element() const { return data_->dim + 1; }
  std::size_t node_count() const { return data_->nodes.size(); }
  std::size_t element_count() const { return data_->elements.size(); }

  const Point& node(std::size_t i) const { return data_->nodes[i]; }
  const std::array<int, 3>& element(std::size_t e) const { return data_->elements[e]; }
  double measure(std::size_t e) const { return data_->measures[e]; }
  const std::array<Point, 3>& basis_gradients(std::size_t e) const { return data_->basis_grads[e]; }

  bool is_boundary(std::size_t i) const { return data_->on_boundary[i] != 0; }
  const std::vector<int>& boundary_nodes() const { return data_->boundary_nodes; }
  const std::vector<BoundaryEdge>& boundary_edges() const { return data_->boundary_edges; }
  const std::vector<QuadPoint>& quadrature() const { return data_->quadrature; }

  double total_measure() const { return data_->total_measure; }
  const Point& lower() const { return data_->lower; }
  const Point& upper() const { return data_->upper; }

  // Physical coordinates of a barycentric point inside element e.
  Point map_point(std::size_t e, const std::array<double, 3>& bary) const {
    Point x{0.0, 0.0};
    const auto& el = element(e);
    for (int k = 0; k < vertices_per_element(); ++k) {
      const Point& n = node(el[k]);
      x[0] += bary[k] * n[0];
      x[1] += bary[k] * n[1];
    }
    return x;
  }

  bool operator==(const Mesh& other) const { return data_ == other.data_; }

 private:
  std::shared_ptr<const detail::MeshData> data_;
};

inline Mesh build_interval_mesh(double a, double b, int n) {
  if (!(a < b)) throw std::invalid_argument("interval mesh requires a < b");
  if (n < 2) throw std::invalid_argument("interval mesh requires n >= 2 segments");

  auto d = std::make_shared<detail::MeshData>();
  d->dim = 1;
  d->nodes.resize(n + 1);
  const double h = (b - a) / n;
  for (int i = 0; i <= n; ++i) d->nodes[i] = {i == n ? b : a + i * h, 0.0};
  for (int e = 0; e < n; ++e) {
    d->elements.push_back({e, e + 1, 0});
    const double len = d->nodes[e + 1][0] - d->nodes[e][0];
    d->measures.push_back(len);
    d->basis_grads.push_back({Point{-1.0 / len, 0.0}, Point{1.0 / len, 0.0}, Point{0.0, 0.0}});
  }
  d->on_boundary.assign(n + 1, 0);
  d->on_boundary[0] = d->on_boundary[n] = 1;
  d->boundary_nodes = {0, n};
  d->quadrature = detail::quadrature_rule(1);
  d->total_measure = b - a;
  d->lower = {a, 0.0};
  d->upper = {b, 0.0};
  return Mesh(std::move(d));
}

// Structured grid over [x0,x1]x[y0,y1]; every cell is cut along its
// lower-left to upper-right diagonal.
inline Mesh build_rectangle_mesh(Point x_range, Point y_range, int nx, int ny) {
  if (!(x_range[0] < x_range[1]) || !(y_range[0] < y_range[1]))
    throw std::invalid_argument("rectangle mesh requires positive side lengths");
  if (nx < 2 || ny < 2) throw std::invalid_argument("rectangle mesh requires nx, ny >= 2");

  auto d = std::make_shared<detail::MeshData>();
  d->dim = 2;
  const double hx = (x_range[1] - x_range[0]) / nx;
  const double hy = (y_range[1] - y_range[0]) / ny;
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };

  d->nodes.resize(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  d->on_boundary.assign(d->nodes.size(), 0);
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      double x = i == nx ? x_range[1] : x_range[0] + i * hx;
      double y = j == ny ? y_range[1] : y_range[0] + j * hy;
      d->nodes[id(i, j)] = {x, y};
      if (i == 0 || j == 0 || i == nx || j == ny) {
        d->on_boundary[id(i, j)] = 1;
        d->boundary_nodes.push_back(id(i, j));
      }
    }
  }

  auto add_triangle = [&](int a, int b, int c) {
    const Point& pa = d->nodes[a];
    const Point& pb = d->nodes[b];
    const Point& pc = d->nodes[c];
    const double det = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]);
    d->elements.push_back({a, b, c});
    d->measures.push_back(0.5 * det);
    // grad(phi_k) = rot90(opposite edge) / det
    d->basis_grads.push_back({Point{(pb[1] - pc[1]) / det, (pc[0] - pb[0]) / det},
                              Point{(pc[1] - pa[1]) / det, (pa[0] - pc[0]) / det},
                              Point{(pa[1] - pb[1]) / det, (pb[0] - pa[0]) / det}});
  };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      add_triangle(id(i, j), id(i + 1, j), id(i + 1, j + 1));
      add_triangle(id(i, j), id(i + 1, j + 1), id(i, j + 1));
    }
  }

  auto add_edge = [&](int a, int b) {
    const Point& pa = d->nodes[a];
    const Point& pb = d->nodes[b];
    d->boundary_edges.push_back({a, b, std::hypot(pb[0] - pa[0], pb[1] - pa[1])});
  };
  for (int i = 0; i < nx; ++i) {
    add_edge(id(i, 0), id(i + 1, 0));
    add_edge(id(i, ny), id(i + 1, ny));
  }
  for (int j = 0; j < ny; ++j) {
    add_edge(id(0, j), id(0, j + 1));
    add_edge(id(nx, j), id(nx, j + 1));
  }

  d->quadrature = detail::quadrature_rule(2);
  d->total_measure = (x_range[1] - x_range[0]) * (y_range[1] - y_range[0]);
  d->lower = {x_range[0], y_range[0]};
  d->upper = {x_range[1], y_range[1]};
  return Mesh(std::move(d));
}

// Nodal coefficient vector on a mesh.
class Field {
 public:
  Field() = default;
  explicit Field(Mesh mesh) : mesh_(std::move(mesh)), values_(Vector::Zero(mesh_.node_count())) {}
  Field(Mesh mesh, Vector values) : mesh_(std::move(mesh)), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.size()) != mesh_.node_count())
      throw std::invalid_argument("field length " + std::to_string(values_.size()) +
                                  " does not match node count " + std::to_string(mesh_.node_count()));
  }

  const Mesh& mesh() const { return mesh_; }
  const Vector& values() const { return values_; }
  Vector& values() { return values_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }

  Field with_values(Vector v) const { return Field(mesh_, std::move(v)); }
  Field scaled(double t) const { return Field(mesh_, t * values_); }

  bool dirichlet_admissible() const {
    for (int i : mesh_.boundary_nodes())
      if (values_[i] != 0.0) return false;
    return true;
  }

 private:
  Mesh mesh_;
  Vector values_;
};

inline Field interpolate(const Mesh& mesh, const std::function<double(const Point&)>& fn) {
  Vector v(mesh.node_count());
  for (std::size_t i = 0; i < mesh.node_count(); ++i) v[static_cast<Eigen::Index>(i)] = fn(mesh.node(i));
  return Field(mesh, std::move(v));
}

inline void zero_boundary(const Mesh& mesh, Vector& v) {
  for (int i : mesh.boundary_nodes()) v[i] = 0.0;
}

inline void require_p(double p, double minimum = 2.0) {
  if (!(p >= minimum) || !std::isfinite(p))
    throw std::invalid_argument("exponent p must satisfy p >= " + std::to_string(minimum) +
                                ", got " + std::to_string(p));
}

namespace detail {

inline Point element_gradient(const Mesh& mesh, std::size_t e, const Vector& u) {
  const auto& el = mesh.element(e);
  const auto& g = mesh.basis_gradients(e);
  Point grad{0.0, 0.0};
  for (int k = 0; k < mesh.vertices_per_element(); ++k) {
    grad[0] += u[el[k]] * g[k][0];
    grad[1] += u[el[k]] * g[k][1];
  }
  return grad;
}

inline double at_quad(const Mesh& mesh, std::size_t e, const QuadPoint& q, const Vector& u) {
  const auto& el = mesh.element(e);
  double v = 0.0;
  for (int k = 0; k < mesh.vertices_per_element(); ++k) v += q.bary[k] * u[el[k]];
  return v;
}

}  // namespace detail

// sum_e |grad u|^p |e|, i.e. ||Du||_p^p.
inline double grad_seminorm_p(const Mesh& mesh, const Vector& u, double p) {
  require_p(p);
  double total = 0.0;
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    Point g = detail::element_gradient(mesh, e, u);
    total += std::pow(std::hypot(g[0], g[1]), p) * mesh.measure(e);
  }
  return total;
}

inline double grad_seminorm_p(const Field& u, double p) { return grad_seminorm_p(u.mesh(), u.values(), p); }

// Integral of |u|^p (the p-th power, not the root).
inline double lp_norm_p(const Mesh& mesh, const Vector& u, double p) {
  require_p(p, 1.0);
  double total = 0.0;
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    double local = 0.0;
    for (const auto& q : mesh.quadrature()) local += q.weight * std::pow(std::abs(detail::at_quad(mesh, e, q, u)), p);
    total += local * mesh.measure(e);
  }
  return total;
}

inline double lp_norm_p(const Field& u, double p) { return lp_norm_p(u.mesh(), u.values(), p); }

// Gradient of ||Du||_p^p with respect to the nodal coefficients.
inline Vector grad_seminorm_p_gradient(const Mesh& mesh, const Vector& u, double p) {
  Vector out = Vector::Zero(u.size());
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    Point g = detail::element_gradient(mesh, e, u);
    const double norm = std::hypot(g[0], g[1]);
    const double flux = p * std::pow(norm, p - 2.0) * mesh.measure(e);
    const auto& el = mesh.element(e);
    const auto& bg = mesh.basis_gradients(e);
    for (int k = 0; k < mesh.vertices_per_element(); ++k)
      out[el[k]] += flux * (g[0] * bg[k][0] + g[1] * bg[k][1]);
  }
  return out;
}

// Gradient of the quadrature value of integral |u|^p.
inline Vector lp_norm_p_gradient(const Mesh& mesh, const Vector& u, double p) {
  Vector out = Vector::Zero(u.size());
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto& el = mesh.element(e);
    for (const auto& q : mesh.quadrature()) {
      const double v = detail::at_quad(mesh, e, q, u);
      const double w = p * std::pow(std::abs(v), p - 2.0) * v * q.weight * mesh.measure(e);
      for (int k = 0; k < mesh.vertices_per_element(); ++k) out[el[k]] += w * q.bary[k];
    }
  }
  return out;
}

// Full Sobolev norm (||Du||_p^p + ||u||_p^p)^(1/p).
inline double sobolev_norm(const Mesh& mesh, const Vector& u, double p) {
  return std::pow(grad_seminorm_p(mesh, u, p) + lp_norm_p(mesh, u, p), 1.0 / p);
}

inline double sobolev_norm(const Field& u, double p) { return sobolev_norm(u.mesh(), u.values(), p); }

inline Vector sobolev_norm_p_gradient(const Mesh& mesh, const Vector& u, double p) {
  return grad_seminorm_p_gradient(mesh, u, p) + lp_norm_p_gradient(mesh, u, p);
}

// Integral over the boundary of nodal values: the two endpoint values in 1D,
// the trapezoidal rule along boundary edges in 2D.
inline double boundary_integral(const Mesh& mesh, const Vector& nodal) {
  if (mesh.dimension() == 1) return nodal[mesh.boundary_nodes().front()] + nodal[mesh.boundary_nodes().back()];
  double total = 0.0;
  for (const auto& edge : mesh.boundary_edges()) total += 0.5 * edge.length * (nodal[edge.a] + nodal[edge.b]);
  return total;
}

// Row vector m such that mean_value(u) = m.dot(u).
inline Vector mean_weights(const Mesh& mesh) {
  Vector m = Vector::Zero(mesh.node_count());
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto& el = mesh.element(e);
    for (const auto& q : mesh.quadrature())
      for (int k = 0; k < mesh.vertices_per_element(); ++k)
        m[el[k]] += q.weight * q.bary[k] * mesh.measure(e);
  }
  return m / mesh.total_measure();
}

inline double mean_value(const Mesh& mesh, const Vector& u) { return mean_weights(mesh).dot(u); }
inline double mean_value(const Field& u) { return mean_value(u.mesh(), u.values()); }

// p = 2 stiffness and consistent mass matrices.
inline SparseMatrix stiffness_matrix(const Mesh& mesh) {
  std::vector<Eigen::Triplet<double>> trips;
  const int nv = mesh.vertices_per_element();
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto& el = mesh.element(e);
    const auto& g = mesh.basis_gradients(e);
    for (int a = 0; a < nv; ++a)
      for (int b = 0; b < nv; ++b)
        trips.emplace_back(el[a], el[b], (g[a][0] * g[b][0] + g[a][1] * g[b][1]) * mesh.measure(e));
  }
  SparseMatrix K(mesh.node_count(), mesh.node_count());
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

inline SparseMatrix mass_matrix(const Mesh& mesh) {
  std::vector<Eigen::Triplet<double>> trips;
  const int nv = mesh.vertices_per_element();
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto& el = mesh.element(e);
    for (int a = 0; a < nv; ++a) {
      for (int b = 0; b < nv; ++b) {
        double v = 0.0;
        for (const auto& q : mesh.quadrature()) v += q.weight * q.bary[a] * q.bary[b];
        trips.emplace_back(el[a], el[b], v * mesh.measure(e));
      }
    }
  }
  SparseMatrix M(mesh.node_count(), mesh.node_count());
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

// One record per node: node_index,x[,y],value
inline void write_field_csv(std::ostream& os, const Field& u) {
  const Mesh& mesh = u.mesh();
  os << (mesh.dimension() == 1 ? "node_index,x,value\n" : "node_index,x,y,value\n");
  char buf[96];
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Point& x = mesh.node(i);
    if (mesh.dimension() == 1)
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, x[0], u[i]);
    else
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", i, x[0], x[1], u[i]);
    os << buf;
  }
}

}  // namespace plap
