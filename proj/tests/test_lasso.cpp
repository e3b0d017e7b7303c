#include "mbi/lasso.hpp"
#include "support.hpp"

#include <doctest.h>

#include <array>

using namespace mbi;
using mbi::testing::Gen;

namespace {

double lasso_objective(const MatrixXd& x, const VectorXd& y, double lambda, double b1, double b2) {
  const VectorXd b = (VectorXd(2) << b1, b2).finished();
  const VectorXd fitted = x * b;
  const double b0 = (y - fitted).mean();
  return (y.array() - b0 - fitted.array()).square().sum() / (2.0 * y.size()) + lambda * b.lpNorm<1>();
}

// Zooming grid search: 201 x 201 points, shrinking the box around the best cell.
std::array<double, 2> brute_force(const MatrixXd& x, const VectorXd& y, double lambda) {
  double c1 = 0.0, c2 = 0.0, half = 5.0;
  for (int level = 0; level < 12; ++level) {
    double best = std::numeric_limits<double>::infinity(), n1 = c1, n2 = c2;
    for (int i = -100; i <= 100; ++i) {
      for (int j = -100; j <= 100; ++j) {
        const double b1 = c1 + half * i / 100.0, b2 = c2 + half * j / 100.0;
        const double v = lasso_objective(x, y, lambda, b1, b2);
        if (v < best) {
          best = v;
          n1 = b1;
          n2 = b2;
        }
      }
    }
    c1 = n1;
    c2 = n2;
    half /= 10.0;
  }
  return {c1, c2};
}

}  // namespace

TEST_CASE("large lambda zeroes every slope") {
  Gen gen(1);
  const MatrixXd x = gen.normal_matrix(40, 5);
  const VectorXd y = x.col(0) * 3.0 + gen.normal_vector(40);
  const std::vector<double> lambdas{1e6};
  const LassoPath path = lasso_path(x, y, lambdas);
  CHECK(path.coefficients.col(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(path.intercepts(0) == doctest::Approx(y.mean()).epsilon(1e-12));
}

TEST_CASE("orthonormal design gives the soft-threshold solution") {
  // Centered orthogonal columns with x_j^T x_j = n.
  const int n = 8;
  MatrixXd x(n, 3);
  x.col(0) << 1, -1, 1, -1, 1, -1, 1, -1;
  x.col(1) << 1, 1, -1, -1, 1, 1, -1, -1;
  x.col(2) << 1, 1, 1, 1, -1, -1, -1, -1;
  Gen gen(2);
  const VectorXd y = gen.normal_vector(n) * 2.0;
  for (double lambda : {0.05, 0.3, 0.8}) {
    const std::vector<double> grid{lambda};
    const LassoPath path = lasso_path(x, y, grid, 1e-14);
    for (int j = 0; j < 3; ++j) {
      const double z = x.col(j).dot(y) / n;
      const double expected = z > lambda ? z - lambda : (z < -lambda ? z + lambda : 0.0);
      CHECK(path.coefficients(j, 0) == doctest::Approx(expected).epsilon(1e-10));
    }
  }
}

TEST_CASE("two predictors match brute-force minimization") {
  for (std::uint64_t seed = 3; seed < 8; ++seed) {
    Gen gen(seed);
    MatrixXd x = gen.normal_matrix(30, 2);
    x.col(1) += 0.6 * x.col(0);
    const VectorXd y = 1.5 * x.col(0) - 0.7 * x.col(1) + gen.normal_vector(30);
    const double lambda = gen.uniform(0.02, 0.4);
    const std::vector<double> grid{lambda};
    const LassoPath path = lasso_path(x, y, grid, 1e-14);
    const auto bf = brute_force(x, y, lambda);
    CHECK(std::abs(path.coefficients(0, 0) - bf[0]) < 1e-6);
    CHECK(std::abs(path.coefficients(1, 0) - bf[1]) < 1e-6);
  }
}

TEST_CASE("cross-validated selection is deterministic per seed") {
  Gen gen(9);
  const MatrixXd x = gen.normal_matrix(60, 6);
  const VectorXd y = 2.0 * x.col(1) + gen.normal_vector(60);
  std::vector<double> grid;
  for (int i = 0; i < 20; ++i) grid.push_back(std::pow(10.0, -2.0 + i * 0.15));
  const IndexList folds = make_folds(60, 10, 42);
  const LassoSelection a = lasso_coordinate_descent(x, y, grid, folds);
  const LassoSelection b = lasso_coordinate_descent(x, y, grid, make_folds(60, 10, 42));
  CHECK(a.selected == b.selected);
  CHECK(a.path.coefficients == b.path.coefficients);
  CHECK(make_folds(60, 10, 42) == folds);
  for (int k = 0; k < 10; ++k) CHECK(std::count(folds.begin(), folds.end(), k) == 6);
}
