#pragma once

#include "plap/mesh.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <stdexcept>

namespace plap {

enum class Boundary { dirichlet, neumann };

inline const char* to_string(Boundary bc) { return bc == Boundary::dirichlet ? "dirichlet" : "neumann"; }

// Factorized p = 2 Riesz operator. Dirichlet: stiffness matrix with
// boundary rows and columns replaced by the identity. Neumann: stiffness
// plus mass, which is nonsingular on the full space.
class RieszMap {
 public:
  RieszMap(const Mesh& mesh, Boundary bc) : mesh_(mesh), bc_(bc) {
    SparseMatrix K = stiffness_matrix(mesh);
    if (bc == Boundary::neumann) {
      K += mass_matrix(mesh);
    } else {
      std::vector<char> fixed(mesh.node_count(), 0);
      for (int i : mesh.boundary_nodes()) fixed[i] = 1;
      for (int k = 0; k < K.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(K, k); it; ++it)
          if (fixed[it.row()] || fixed[it.col()]) it.valueRef() = it.row() == it.col() ? 1.0 : 0.0;
      K.prune(0.0);
    }
    matrix_ = K;
    solver_.compute(matrix_);
    if (solver_.info() != Eigen::Success) throw std::runtime_error("Riesz matrix factorization failed");
  }

  const Mesh& mesh() const { return mesh_; }
  Boundary boundary() const { return bc_; }
  const SparseMatrix& matrix() const { return matrix_; }

  // Riesz representative K^{-1} r of a residual; Dirichlet rows are dropped.
  Vector apply(const Vector& r) const {
    Vector rhs = r;
    if (bc_ == Boundary::dirichlet) zero_boundary(mesh_, rhs);
    Vector out = solver_.solve(rhs);
    if (bc_ == Boundary::dirichlet) zero_boundary(mesh_, out);
    return out;
  }

  // sqrt(r^T K^{-1} r)
  double dual_norm(const Vector& r) const {
    Vector rhs = r;
    if (bc_ == Boundary::dirichlet) zero_boundary(mesh_, rhs);
    const double v = rhs.dot(solver_.solve(rhs));
    return std::sqrt(std::max(v, 0.0));
  }

 private:
  Mesh mesh_;
  Boundary bc_;
  SparseMatrix matrix_;
  Eigen::SimplicialLDLT<SparseMatrix> solver_;
};

}  // namespace plap
