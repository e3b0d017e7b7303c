#pragma once

#include "mbi/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mbi {

/// Solutions of min (1/2n)||y - b0 - X b||^2 + lambda ||b||_1 along a grid.
struct LassoPath {
  std::vector<double> lambdas;  // as given
  MatrixXd coefficients;        // p x L, on the scale of the supplied X
  VectorXd intercepts;          // L
  std::vector<int> sweeps;      // coordinate sweeps used per lambda
};

struct LassoSelection {
  LassoPath path;
  std::vector<double> cv_error;  // mean held-out squared error per lambda
  int selected = 0;
};

struct LassoOptions {
  int folds = 10;
  std::uint64_t seed = 1;
  int path_length = 50;
  double min_ratio = -1.0;  // <0: 1e-4 when n > p, else 1e-2
  double tolerance = 1e-10;
  int max_sweeps = 100000;
};

/// Coefficients on the original predictor scale.
struct LassoFit {
  double intercept = 0.0;
  VectorXd coefficients;
  double lambda = 0.0;
};

/// Pathwise coordinate descent with soft-thresholding. The grid is traversed
/// from the largest lambda down so each solve is warm-started.
LassoPath lasso_path(const MatrixXd& x, const VectorXd& y, std::span<const double> lambdas,
                     double tolerance = 1e-10, int max_sweeps = 100000);

/// Path on all rows plus K-fold cross-validation; `folds[i]` is the fold of row i.
/// Selects the lambda with the smallest mean held-out error (ties: larger lambda).
LassoSelection lasso_coordinate_descent(const MatrixXd& xs, const VectorXd& ys,
                                        std::span<const double> lambdas, const IndexList& folds,
                                        double tolerance = 1e-10);

/// Deterministic fold labels 0..k-1 from a seeded shuffle.
IndexList make_folds(int n, int k, std::uint64_t seed);

/// max_j |x_j' (y - ybar)| / n for standardized x.
double lasso_lambda_max(const MatrixXd& xs, const VectorXd& y);

std::vector<double> log_grid(double high, double low, int count);

/// Standardizes, cross-validates and maps the chosen solution back to the
/// original scale. Zero-variance predictors get coefficient 0.
LassoFit fit_lasso(const MatrixXd& x, const VectorXd& y, const LassoOptions& options = {});

/// Column standardization used by the penalized fits (population sd).
struct Standardizer {
  VectorXd mean;
  VectorXd scale;  // 0 for constant columns
  explicit Standardizer(const MatrixXd& x);
  MatrixXd apply(const MatrixXd& x) const;
};

double soft_threshold(double z, double gamma);

}  // namespace mbi
