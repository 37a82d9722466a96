#include <Eigen/Dense>
#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>
#include <sstream>

#include "ocfem/assembly.hpp"
#include "ocfem/norms.hpp"
#include "ocfem/problem.hpp"

using namespace ocfem;

namespace {

// Independent stiffness oracle for the uniform criss-cross family: every
// triangle is right isosceles, whose element matrix (right-angle vertex
// first) is [[1,-1/2,-1/2],[-1/2,1/2,0],[-1/2,0,1/2]] regardless of leg
// length. Triangle (v00,v10,v11) has its right angle at v10, (v00,v11,v01)
// at v01.
Eigen::MatrixXd hand_assembled_stiffness(int n) {
  const int nv = (n + 1) * (n + 1);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nv, nv);
  const double el[3][3] = {{1.0, -0.5, -0.5}, {-0.5, 0.5, 0.0}, {-0.5, 0.0, 0.5}};
  auto vid = [n](int i, int j) { return j * (n + 1) + i; };
  auto add = [&](int a, int b, int c) {  // right angle at a
    const int loc[3] = {a, b, c};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) K(loc[i], loc[j]) += el[i][j];
  };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      add(vid(i + 1, j), vid(i + 1, j + 1), vid(i, j));
      add(vid(i, j + 1), vid(i, j), vid(i + 1, j + 1));
    }
  return K;
}

FeFunction random_fe(const MeshPtr& m, unsigned seed, double amp = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-amp, amp);
  Eigen::VectorXd c(m->n_vertices());
  for (int i = 0; i < c.size(); ++i) c[i] = dist(rng);
  return FeFunction(m, std::move(c));
}

}  // namespace

TEST_CASE("stiffness matrix matches the hand-assembled oracle", "[assembly]") {
  for (int n : {2, 3}) {
    auto m = uniform_triangulation(n);
    const Eigen::MatrixXd K = assemble_stiffness(*m).to_dense();
    const Eigen::MatrixXd K_oracle = hand_assembled_stiffness(n);
    CHECK((K - K_oracle).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("center stiffness row is the classical 5-point stencil", "[assembly]") {
  auto m = uniform_triangulation(2);
  auto K = assemble_stiffness(*m);
  const int c = 4;  // vertex (0.5, 0.5)
  CHECK(K.coeff(c, c) == Catch::Approx(4.0).epsilon(1e-14));
  for (int axis : {1, 3, 5, 7}) CHECK(K.coeff(c, axis) == Catch::Approx(-1.0).epsilon(1e-14));
  for (int diag : {0, 2, 6, 8}) CHECK(std::abs(K.coeff(c, diag)) < 1e-15);
}

TEST_CASE("stiffness row sums vanish and the matrix is positive semidefinite", "[assembly]") {
  auto m = uniform_triangulation(4);
  auto K = assemble_stiffness(*m);
  for (double s : K.row_sums()) CHECK(std::abs(s) < 1e-13);
  CHECK(K.max_asymmetry() < 1e-15);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K.to_dense());
  CHECK(es.eigenvalues().minCoeff() >= -1e-12);
}

TEST_CASE("mass matrix: total mass, symmetry, positive definiteness", "[assembly]") {
  auto m = uniform_triangulation(4);
  auto M = assemble_mass(*m);
  double total = 0.0;
  for (double s : M.row_sums()) total += s;
  CHECK(std::abs(total - 1.0) < 1e-13);
  CHECK(M.max_asymmetry() < 1e-16);

  Eigen::LLT<Eigen::MatrixXd> llt(M.to_dense());
  CHECK(llt.info() == Eigen::Success);

  const Eigen::VectorXd lump = lumped_mass(*m);
  const auto sums = M.row_sums();
  for (int i = 0; i < m->n_vertices(); ++i) CHECK(lump[i] == Catch::Approx(sums[i]).epsilon(1e-14));
}

TEST_CASE("single-triangle element mass matrix", "[assembly]") {
  std::istringstream src("vertices 3 triangles 1\n0 0\n2 0\n0 3\n0 1 2\n");
  auto m = load_mesh(src);
  const double area = 3.0;
  auto M = assemble_mass(*m);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(M.coeff(i, j) == Catch::Approx(area / 12.0 * (i == j ? 2.0 : 1.0)).epsilon(1e-15));
}

TEST_CASE("semilinear terms: trivial and constant cases", "[assembly]") {
  auto m = uniform_triangulation(3);
  auto y = random_fe(m, 5);
  const Eigen::VectorXd zero = assemble_semilinear(y, [](double) { return 0.0; }, 4);
  CHECK(zero.norm() == 0.0);

  const double c = 1.7;
  FeFunction yc(m, Eigen::VectorXd::Constant(m->n_vertices(), c));
  const Eigen::VectorXd v = assemble_semilinear(yc, [](double s) { return s * s * s; }, 2);
  const auto sums = assemble_mass(*m).row_sums();
  for (int i = 0; i < v.size(); ++i)
    CHECK(v[i] == Catch::Approx(c * c * c * sums[i]).epsilon(1e-13));

  CHECK_THROWS_AS(assemble_semilinear(y, [](double s) { return s; }, 1), InvalidArgument);
}

TEST_CASE("semilinear cubic term agrees with a high-order quadrature oracle", "[assembly]") {
  auto m = uniform_triangulation(2);
  Eigen::VectorXd hat = Eigen::VectorXd::Zero(m->n_vertices());
  hat[4] = 1.0;  // hat at the center vertex
  FeFunction y(m, hat);
  auto cube = [](double s) { return s * s * s; };
  const Eigen::VectorXd order4 = assemble_semilinear(y, cube, 4);
  const Eigen::VectorXd order12 = assemble_semilinear(y, cube, 12);
  CHECK((order4 - order12).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("semilinear identity term is mass-matrix multiplication", "[assembly]") {
  auto m = uniform_triangulation(4);
  auto y = random_fe(m, 11);
  const Eigen::VectorXd lhs = assemble_semilinear(y, [](double s) { return s; }, 2);
  const Eigen::VectorXd rhs = assemble_mass(*m).apply(y.coeffs);
  CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
}

TEST_CASE("weighted mass matrix", "[assembly]") {
  auto m = uniform_triangulation(3);
  auto ones = assemble_weighted_mass(
      *m, [](int, const std::array<double, 3>&, const Vec2&) { return 1.0; }, 4);
  const Eigen::MatrixXd M = assemble_mass(*m).to_dense();
  CHECK((ones.to_dense() - M).cwiseAbs().maxCoeff() < 1e-15);

  // weight x -> x1 against a per-triangle quadrature oracle written out longhand
  auto Wx = assemble_weighted_mass(
      *m, [](int, const std::array<double, 3>&, const Vec2& x) { return x.x; }, 3);
  Eigen::MatrixXd oracle = Eigen::MatrixXd::Zero(m->n_vertices(), m->n_vertices());
  const auto& rule = triangle_rule(3);
  for (int t = 0; t < m->n_triangles(); ++t) {
    const auto& tri = m->triangles[t];
    const Vec2 a = m->vertices[tri[0]], b = m->vertices[tri[1]], c = m->vertices[tri[2]];
    for (const auto& q : rule) {
      const double lambda[3] = {q.l1, q.l2, q.l3};
      const Vec2 x = q.l1 * a + q.l2 * b + q.l3 * c;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          oracle(tri[i], tri[j]) += m->triangle_area(t) * q.w * x.x * lambda[i] * lambda[j];
    }
  }
  CHECK((Wx.to_dense() - oracle).cwiseAbs().maxCoeff() < 1e-15);

  // composed and product weights reproduce the plain paths
  auto y = random_fe(m, 3);
  auto p = random_fe(m, 4);
  auto Wc = assemble_weighted_mass(*m, composed_weight(y, [](double s) { return 2.0 * s; }), 4);
  auto Wp = assemble_weighted_mass(*m, product_weight(y, p, [](double) { return 1.0; }), 4);
  auto Wp_direct = assemble_weighted_mass(
      *m, [&p](int t, const std::array<double, 3>& l, const Vec2&) { return p.eval_local(t, l); },
      4);
  CHECK((Wp.to_dense() - Wp_direct.to_dense()).cwiseAbs().maxCoeff() < 1e-15);
  auto Wc_direct = assemble_weighted_mass(
      *m,
      [&y](int t, const std::array<double, 3>& l, const Vec2&) { return 2.0 * y.eval_local(t, l); },
      4);
  CHECK((Wc.to_dense() - Wc_direct.to_dense()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("point loads", "[assembly]") {
  auto m = uniform_triangulation(2);
  CHECK(assemble_point_loads(*m, {}, {}).norm() == 0.0);

  const Eigen::VectorXd e4 = assemble_point_loads(*m, {4}, {1.0});
  for (int i = 0; i < m->n_vertices(); ++i) CHECK(e4[i] == (i == 4 ? 1.0 : 0.0));

  const Eigen::VectorXd dup = assemble_point_loads(*m, {4, 4}, {0.2, 0.3});
  CHECK(dup[4] == Catch::Approx(0.5).epsilon(1e-16));

  CHECK_THROWS_AS(assemble_point_loads(*m, {99}, {1.0}), InvalidArgument);
  CHECK_THROWS_AS(assemble_point_loads(*m, {1, 2}, {1.0}), InvalidArgument);
}

TEST_CASE("interpolation reproduces affine functions and its own space", "[assembly]") {
  auto m = uniform_triangulation(3);
  auto g = [](const Vec2& p) { return 2.0 * p.x - 0.5 * p.y + 0.25; };
  auto ih = interpolate(m, g);
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const Vec2 x{unit(rng), unit(rng)};
    CHECK(std::abs(ih.eval(x) - g(x)) < 1e-14);
  }

  // interpolating an FE function leaves coefficients unchanged
  auto f = random_fe(m, 17);
  auto again = interpolate(m, [&f](const Vec2& x) { return f.eval(x); });
  CHECK((again.coeffs - f.coeffs).norm() == 0.0);
}

TEST_CASE("interpolation error of x1*x2 decays at second order", "[assembly]") {
  auto g = [](const Vec2& p) { return p.x * p.y; };
  auto max_err = [&](int n) {
    auto ih = interpolate(uniform_triangulation(n), g);
    double e = 0.0;
    for (int i = 0; i <= 60; ++i)
      for (int j = 0; j <= 60; ++j) {
        const Vec2 x{i / 60.0, j / 60.0};
        e = std::max(e, std::abs(ih.eval(x) - g(x)));
      }
    return e;
  };
  const double e4 = max_err(4), e8 = max_err(8), e16 = max_err(16);
  CHECK(e4 / e8 == Catch::Approx(4.0).margin(0.9));
  CHECK(e8 / e16 == Catch::Approx(4.0).margin(0.9));
}

TEST_CASE("pyramid bound is interpolated exactly on even grids", "[assembly]") {
  const auto g = pyramid_lower_field();
  CHECK(g({0.5, 0.5}) == 0.0);
  CHECK(g({0.0, 0.0}) == -0.5);
  CHECK(g({1.0, 1.0}) == -0.5);
  CHECK(g({0.5, 0.0}) == -0.25);
  CHECK(g({0.0, 0.5}) == -0.25);

  std::mt19937 rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int n : {2, 4, 8}) {
    auto ih = interpolate(uniform_triangulation(n), g);
    for (int k = 0; k < 200; ++k) {
      const Vec2 x{unit(rng), unit(rng)};
      CHECK(std::abs(ih.eval(x) - g(x)) < 1e-14);
    }
  }
}
