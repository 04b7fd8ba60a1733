#include "plap/mesh.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace plap;

namespace {

Vector random_vector(std::size_t n, std::mt19937& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vector v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST(Mesh, IntervalCounts) {
  const Mesh m = build_interval_mesh(0.0, 1.0, 4);
  EXPECT_EQ(m.node_count(), 5u);
  EXPECT_EQ(m.element_count(), 4u);
  EXPECT_DOUBLE_EQ(m.node(1)[0] - m.node(0)[0], 0.25);
  EXPECT_EQ(m.boundary_nodes().size(), 2u);
  EXPECT_TRUE(m.is_boundary(0));
  EXPECT_TRUE(m.is_boundary(4));
  for (int i = 1; i < 4; ++i) EXPECT_FALSE(m.is_boundary(i));
}

TEST(Mesh, IntervalRejectsBadInput) {
  EXPECT_THROW(build_interval_mesh(0.0, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(build_interval_mesh(1.0, 1.0, 8), std::invalid_argument);
  EXPECT_THROW(build_interval_mesh(2.0, 1.0, 8), std::invalid_argument);
}

TEST(Mesh, IntervalTotalMeasure) { EXPECT_NEAR(build_interval_mesh(-1.0, 1.0, 8).total_measure(), 2.0, 1e-15); }

TEST(Mesh, RectangleCounts) {
  const Mesh m = build_rectangle_mesh({0, 1}, {0, 1}, 2, 2);
  EXPECT_EQ(m.node_count(), 9u);
  EXPECT_EQ(m.element_count(), 8u);
  double area = 0.0;
  for (std::size_t e = 0; e < m.element_count(); ++e) {
    EXPECT_GT(m.measure(e), 0.0);
    area += m.measure(e);
  }
  EXPECT_NEAR(area, 1.0, 1e-12);
  double perimeter = 0.0;
  for (const auto& edge : m.boundary_edges()) perimeter += edge.length;
  EXPECT_NEAR(perimeter, 4.0, 1e-12);
  EXPECT_EQ(m.boundary_nodes().size(), 8u);
  EXPECT_FALSE(m.is_boundary(4));
}

TEST(Mesh, RectangleRejectsDegenerateRanges) {
  EXPECT_THROW(build_rectangle_mesh({0, 0}, {0, 1}, 4, 4), std::invalid_argument);
  EXPECT_THROW(build_rectangle_mesh({0, 1}, {0, 1}, 1, 4), std::invalid_argument);
}

TEST(Mesh, BoundaryMarkersMatchGeometry) {
  const Mesh m = build_rectangle_mesh({-1, 2}, {0, 0.5}, 7, 5);
  for (std::size_t i = 0; i < m.node_count(); ++i) {
    const Point& x = m.node(i);
    const bool on_edge = std::abs(x[0] + 1) < 1e-12 || std::abs(x[0] - 2) < 1e-12 || std::abs(x[1]) < 1e-12 ||
                         std::abs(x[1] - 0.5) < 1e-12;
    EXPECT_EQ(m.is_boundary(i), on_edge) << i;
  }
  EXPECT_NEAR(m.total_measure(), 1.5, 1e-12);
}

TEST(Mesh, GradSeminormOfLinearFields) {
  const Mesh m1 = build_interval_mesh(0, 1, 16);
  const Field x1 = interpolate(m1, [](const Point& x) { return x[0]; });
  for (double p : {2.0, 3.0, 4.5}) EXPECT_NEAR(grad_seminorm_p(x1, p), 1.0, 1e-12);
  const Field one = interpolate(m1, [](const Point&) { return 1.0; });
  EXPECT_EQ(grad_seminorm_p(one, 2.0), 0.0);
  const Mesh m2 = build_rectangle_mesh({0, 1}, {0, 1}, 5, 7);
  const Field x2 = interpolate(m2, [](const Point& x) { return x[0]; });
  EXPECT_NEAR(grad_seminorm_p(x2, 3.0), 1.0, 1e-12);
  // |grad(x + y)| = sqrt(2)
  const Field xy = interpolate(m2, [](const Point& x) { return x[0] + x[1]; });
  EXPECT_NEAR(grad_seminorm_p(xy, 2.0), 2.0, 1e-12);
}

TEST(Mesh, PBelowTwoRejected) {
  const Mesh m = build_interval_mesh(0, 1, 4);
  EXPECT_THROW(grad_seminorm_p(m, Vector::Zero(5), 1.5), std::invalid_argument);
}

TEST(Mesh, LpNormExamples) {
  const Mesh m = build_interval_mesh(0, 1, 64);
  EXPECT_NEAR(lp_norm_p(interpolate(m, [](const Point&) { return 1.0; }), 2.0), 1.0, 1e-14);
  const Mesh r = build_rectangle_mesh({0, 2}, {0, 3}, 4, 3);
  EXPECT_NEAR(lp_norm_p(interpolate(r, [](const Point&) { return -1.5; }), 3.0), std::pow(1.5, 3) * 6.0, 1e-12);
  EXPECT_NEAR(lp_norm_p(interpolate(m, [](const Point& x) { return x[0]; }), 2.0), 1.0 / 3.0, 1e-12);
}

TEST(Mesh, BoundaryIntegralExamples) {
  const Mesh sq = build_rectangle_mesh({0, 1}, {0, 1}, 6, 6);
  EXPECT_NEAR(boundary_integral(sq, Vector::Ones(sq.node_count())), 4.0, 1e-12);
  const Mesh iv = build_interval_mesh(0, 1, 10);
  EXPECT_EQ(boundary_integral(iv, Vector::Ones(iv.node_count())), 2.0);
  EXPECT_EQ(boundary_integral(iv, Vector::Zero(iv.node_count())), 0.0);
  // trapezoidal rule is exact for the linear trace x on the square: int x dsigma = 2
  const Field x = interpolate(sq, [](const Point& p) { return p[0]; });
  EXPECT_NEAR(boundary_integral(sq, x.values()), 2.0, 1e-12);
}

TEST(Mesh, MeanValueExamples) {
  const Mesh m = build_interval_mesh(0, 1, 33);
  EXPECT_NEAR(mean_value(interpolate(m, [](const Point&) { return 5.0; })), 5.0, 1e-14);
  EXPECT_NEAR(mean_value(interpolate(m, [](const Point& x) { return x[0] - 0.5; })), 0.0, 1e-12);
  const Mesh sq = build_rectangle_mesh({0, 2}, {0, 1}, 8, 4);
  EXPECT_NEAR(mean_value(interpolate(sq, [](const Point& x) { return x[0] * x[1]; })), 0.5, 1e-2);
}

TEST(Mesh, ScalingProperty) {
  std::mt19937 rng(3);
  const Mesh m = build_rectangle_mesh({0, 1}, {0, 1}, 6, 5);
  const Vector u = random_vector(m.node_count(), rng);
  for (double p : {2.0, 2.5, 4.0})
    for (double t : {-3.0, 0.5, 2.0}) {
      const double lhs = grad_seminorm_p(m, Vector(t * u), p);
      EXPECT_NEAR(lhs, std::pow(std::abs(t), p) * grad_seminorm_p(m, u, p), 1e-12 * lhs);
    }
}

TEST(Mesh, HolderMonotoneOnUnitMeasure) {
  std::mt19937 rng(4);
  const Mesh m = build_interval_mesh(0, 1, 40);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector u = random_vector(m.node_count(), rng, -3.0, 3.0);
    double prev = 0.0;
    for (double p : {1.0, 1.5, 2.0, 3.0, 4.0, 6.0}) {
      const double norm = std::pow(lp_norm_p(m, u, p), 1.0 / p);
      EXPECT_GE(norm, prev * (1 - 1e-12));
      prev = norm;
    }
  }
}

TEST(Mesh, QuadratureExactForPiecewiseLinearSquares) {
  // Oracle: exact element integral of a squared linear function, h/3 (a^2 + ab + b^2)
  // in 1D and |T|/6 (sum a_i^2 + sum_{i<j} a_i a_j) in 2D.
  std::mt19937 rng(9);
  const Mesh m1 = build_interval_mesh(0, 2, 17);
  const Vector u1 = random_vector(m1.node_count(), rng);
  double exact1 = 0.0;
  for (std::size_t e = 0; e < m1.element_count(); ++e) {
    const double a = u1[m1.element(e)[0]], b = u1[m1.element(e)[1]];
    exact1 += m1.measure(e) / 3.0 * (a * a + a * b + b * b);
  }
  EXPECT_NEAR(lp_norm_p(m1, u1, 2.0), exact1, 1e-12 * exact1);

  const Mesh m2 = build_rectangle_mesh({0, 1}, {0, 2}, 5, 6);
  const Vector u2 = random_vector(m2.node_count(), rng);
  double exact2 = 0.0;
  for (std::size_t e = 0; e < m2.element_count(); ++e) {
    const auto& el = m2.element(e);
    const double a = u2[el[0]], b = u2[el[1]], c = u2[el[2]];
    exact2 += m2.measure(e) / 6.0 * (a * a + b * b + c * c + a * b + a * c + b * c);
  }
  EXPECT_NEAR(lp_norm_p(m2, u2, 2.0), exact2, 1e-12 * exact2);
}

TEST(Mesh, MatricesMatchNormsAtPTwo) {
  std::mt19937 rng(12);
  const Mesh m = build_rectangle_mesh({0, 1}, {0, 1}, 4, 3);
  const Vector u = random_vector(m.node_count(), rng);
  const SparseMatrix K = stiffness_matrix(m), M = mass_matrix(m);
  EXPECT_NEAR(u.dot(K * u), grad_seminorm_p(m, u, 2.0), 1e-12);
  EXPECT_NEAR(u.dot(M * u), lp_norm_p(m, u, 2.0), 1e-12);
  EXPECT_NEAR(sobolev_norm(m, u, 2.0), std::sqrt(u.dot(K * u) + u.dot(M * u)), 1e-12);
}

TEST(Mesh, NormGradientsMatchFiniteDifferences) {
  std::mt19937 rng(21);
  for (const Mesh& m : {build_interval_mesh(0, 1, 12), build_rectangle_mesh({0, 1}, {0, 1}, 3, 4)}) {
    const Vector u = random_vector(m.node_count(), rng);
    const Vector d = random_vector(m.node_count(), rng);
    const double eps = 1e-6;
    for (double p : {2.0, 3.0, 3.7}) {
      const double fd_a = (grad_seminorm_p(m, Vector(u + eps * d), p) - grad_seminorm_p(m, Vector(u - eps * d), p)) / (2 * eps);
      const double fd_b = (lp_norm_p(m, Vector(u + eps * d), p) - lp_norm_p(m, Vector(u - eps * d), p)) / (2 * eps);
      EXPECT_NEAR(grad_seminorm_p_gradient(m, u, p).dot(d), fd_a, 1e-6 * std::max(1.0, std::abs(fd_a)));
      EXPECT_NEAR(lp_norm_p_gradient(m, u, p).dot(d), fd_b, 1e-6 * std::max(1.0, std::abs(fd_b)));
    }
  }
}

TEST(Mesh, FieldInvariants) {
  const Mesh m = build_interval_mesh(0, 1, 4);
  EXPECT_THROW(Field(m, Vector::Zero(3)), std::invalid_argument);
  Vector v = Vector::Ones(5);
  EXPECT_FALSE(Field(m, v).dirichlet_admissible());
  zero_boundary(m, v);
  EXPECT_TRUE(Field(m, v).dirichlet_admissible());
}

TEST(Mesh, CsvFormat) {
  const Mesh m = build_interval_mesh(0, 1, 2);
  std::ostringstream os;
  write_field_csv(os, interpolate(m, [](const Point& x) { return 2 * x[0]; }));
  EXPECT_EQ(os.str(), "node_index,x,value\n0,0,0\n1,0.5,1\n2,1,2\n");
  const Mesh sq = build_rectangle_mesh({0, 1}, {0, 1}, 2, 2);
  std::ostringstream os2;
  write_field_csv(os2, Field(sq));
  EXPECT_EQ(os2.str().substr(0, 23), "node_index,x,y,value\n0,");
}
