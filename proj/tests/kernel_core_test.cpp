#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "kar/kernel.hpp"
#include "kar/linalg.hpp"

using namespace kar;

namespace {

Eigen::VectorXd vec1(double a) {
  Eigen::VectorXd v(1);
  v << a;
  return v;
}

Eigen::MatrixXd random_points(Eigen::Index n, Eigen::Index d,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd out(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) out(i, j) = normal(rng);
  }
  return out;
}

}  // namespace

TEST_CASE("gaussian kernel is one at identical points") {
  KernelSpec spec{KernelFamily::gaussian, 1.0};
  Eigen::VectorXd x(3);
  x << 0.3, -1.2, 4.0;
  CHECK(kernel_eval(spec, x, x) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("gaussian kernel halves at squared distance 2 ln 2") {
  KernelSpec spec{KernelFamily::gaussian, 1.0};
  Eigen::VectorXd a = vec1(0.0);
  Eigen::VectorXd b = vec1(std::sqrt(2.0 * std::log(2.0)));
  CHECK(kernel_eval(spec, a, b) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("linear kernel is the dot product") {
  KernelSpec spec{KernelFamily::linear, 1.0};
  Eigen::VectorXd a(2), b(2);
  a << 1, 2;
  b << 3, 4;
  CHECK(kernel_eval(spec, a, b) == 11.0);
}

TEST_CASE("kernel evaluation is symmetric in its arguments") {
  KernelSpec g{KernelFamily::gaussian, 0.7};
  KernelSpec l{KernelFamily::linear, 1.0};
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd a(3), b(3);
    for (int j = 0; j < 3; ++j) {
      a(j) = normal(rng);
      b(j) = normal(rng);
    }
    CHECK(kernel_eval(g, a, b) == kernel_eval(g, b, a));
    CHECK(kernel_eval(l, a, b) == kernel_eval(l, b, a));
  }
}

TEST_CASE("kernel rejects mismatched dimensions and bad bandwidths") {
  KernelSpec spec{KernelFamily::gaussian, 1.0};
  Eigen::VectorXd a(2), b(3);
  a.setZero();
  b.setZero();
  CHECK_THROWS_AS(kernel_eval(spec, a, b), InvalidInput);
  KernelSpec bad{KernelFamily::gaussian, 0.0};
  CHECK_THROWS_AS(kernel_eval(bad, a, a), InvalidInput);
  KernelSpec negative{KernelFamily::gaussian, -2.0};
  CHECK_THROWS_AS(gram(negative, random_points(3, 2, 1), random_points(3, 2, 2)),
                  InvalidInput);
}

TEST_CASE("median heuristic on a single pair returns its distance") {
  Eigen::MatrixXd pts(2, 1);
  pts << 0.0, 1.0;
  CHECK(median_heuristic(pts) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("median heuristic takes the middle pairwise distance") {
  // Distances of {0, 1, 3} are {1, 2, 3}.
  Eigen::MatrixXd pts(3, 1);
  pts << 0.0, 1.0, 3.0;
  CHECK(median_heuristic(pts) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("median heuristic rejects degenerate point sets") {
  Eigen::MatrixXd same(3, 1);
  same << 0.0, 0.0, 0.0;
  CHECK_THROWS_AS(median_heuristic(same), DegenerateBandwidth);
  Eigen::MatrixXd single(1, 1);
  single << 2.0;
  CHECK_THROWS_AS(median_heuristic(single), InvalidInput);
}

TEST_CASE("median heuristic ignores the order of the points") {
  Eigen::MatrixXd pts = random_points(9, 2, 11);
  const double ref = median_heuristic(pts);
  Eigen::MatrixXd shuffled(9, 2);
  const int order[9] = {4, 7, 0, 8, 2, 6, 1, 5, 3};
  for (int i = 0; i < 9; ++i) shuffled.row(i) = pts.row(order[i]);
  CHECK(median_heuristic(shuffled) == ref);
}

TEST_CASE("gram of a single point against itself is one") {
  KernelSpec spec{KernelFamily::gaussian, 2.0};
  Eigen::MatrixXd pt(1, 3);
  pt << 0.5, -1.0, 2.0;
  GramMatrix g = gram(spec, pt, pt);
  REQUIRE(g.rows() == 1);
  REQUIRE(g.cols() == 1);
  CHECK(g(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("gram matches elementwise kernel evaluations") {
  KernelSpec spec{KernelFamily::gaussian, 0.8};
  Eigen::MatrixXd a = random_points(3, 2, 21);
  Eigen::MatrixXd b = random_points(3, 2, 22);
  GramMatrix g = gram(spec, a, b);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      CHECK(g(i, j) == doctest::Approx(kernel_eval(
                           spec, a.row(i).transpose(), b.row(j).transpose()))
                           .epsilon(1e-12));
    }
  }
}

TEST_CASE("gram on one point set is symmetric and nearly positive") {
  KernelSpec spec{KernelFamily::gaussian, 1.3};
  Eigen::MatrixXd a = random_points(40, 3, 31);
  GramMatrix g = gram(spec, a, a);
  CHECK((g - g.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
  CHECK(eig.eigenvalues().minCoeff() > -1e-8 * g.trace());
}

TEST_CASE("gram rejects mismatched point dimensions") {
  KernelSpec spec{KernelFamily::gaussian, 1.0};
  CHECK_THROWS_AS(gram(spec, random_points(3, 2, 1), random_points(3, 3, 2)),
                  InvalidInput);
}

TEST_CASE("kernel column equals the matching gram column") {
  KernelSpec spec{KernelFamily::gaussian, 0.6};
  Eigen::MatrixXd a = random_points(7, 2, 41);
  Eigen::VectorXd z = random_points(1, 2, 42).row(0).transpose();
  Eigen::VectorXd col = kernel_column(spec, a, z);
  Eigen::MatrixXd zrow = z.transpose();
  GramMatrix g = gram(spec, a, zrow);
  CHECK((col - g.col(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ridge solve inverts identity plus scale") {
  Eigen::MatrixXd k = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd rhs(2);
  rhs << 1, 0;
  Eigen::MatrixXd s = ridge_solve(k, 1.0, rhs);
  CHECK(s(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(s(1, 0) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("ridge solve handles a zero matrix through the scale term") {
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(2, 2);
  Eigen::VectorXd rhs(2);
  rhs << 2, 4;
  Eigen::MatrixXd s = ridge_solve(k, 2.0, rhs);
  CHECK(s(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s(1, 0) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("ridge solve leaves a tiny residual on random spd systems") {
  std::mt19937_64 rng(51);
  std::normal_distribution<double> normal;
  for (Eigen::Index n : {20, 120, 500}) {
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) a(i, j) = normal(rng);
    }
    Eigen::MatrixXd k = a * a.transpose();
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) rhs(i) = normal(rng);
    Eigen::MatrixXd s = ridge_solve(k, 0.1, rhs);
    const double resid = ((k + 0.1 * Eigen::MatrixXd::Identity(n, n)) * s -
                          rhs).norm();
    CHECK(resid < 1e-8 * (rhs.norm() + 1.0));
  }
}

TEST_CASE("ridge solve rejects non-square or mismatched systems") {
  Eigen::MatrixXd k = Eigen::MatrixXd::Identity(3, 2);
  CHECK_THROWS_AS(ridge_solve(k, 1.0, Eigen::VectorXd::Zero(3)), InvalidInput);
  Eigen::MatrixXd sq = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(ridge_solve(sq, 1.0, Eigen::VectorXd::Zero(2)), InvalidInput);
}
