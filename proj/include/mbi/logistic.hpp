#pragma once

#include "mbi/lasso.hpp"
#include "mbi/types.hpp"

namespace mbi {

struct LogisticOptions {
  int max_iterations = 50;
  double tolerance = 1e-8;  // on max |coefficient change|
  double ridge = 1e-6;      // jitter against separation
};

/// Logistic regression with intercept by iteratively reweighted least squares.
/// `y` must be 0/1. Returns coefficients on the original scale.
struct LogisticFit {
  double intercept = 0.0;
  VectorXd coefficients;
  int iterations = 0;
  bool converged = false;
  double lambda = 0.0;
};

LogisticFit fit_logistic(const MatrixXd& x, const VectorXd& y, const LogisticOptions& options = {});

/// L1-penalized logistic regression (proximal Newton outer loop, coordinate
/// descent inner loop), lambda chosen by K-fold cross-validated deviance.
LogisticFit fit_logistic_lasso(const MatrixXd& x, const VectorXd& y,
                               const LassoOptions& options = {});

double logistic(double eta);

}  // namespace mbi
