#pragma once

#include "mbi/imputation.hpp"
#include "mbi/patterns.hpp"

#include <vector>

namespace mbi {

/// Univariate SCAD solution for a standardized column:
/// argmin_b (b - z)^2 / 2 + p_lambda(|b|).
double scad_threshold(double z, double lambda, double a = 3.7);

struct ScadPath {
  std::vector<double> lambdas;  // decreasing, possibly truncated at saturation
  MatrixXd coefficients;        // p x L, standardized scale
  VectorXd intercepts;
};

/// SCAD-penalized least squares (1/2n)|y - b0 - X b|^2 + sum p_lambda(|b_j|)
/// by coordinate descent on standardized columns, warm-started down the grid.
/// Stops once df >= n - 1.
ScadPath scad_path(const MatrixXd& x, const VectorXd& y, std::vector<double> lambdas, double a = 3.7,
                   double tolerance = 1e-9, int max_sweeps = 10000);

struct BaselineOptions {
  int path_length = 50;
  double min_ratio = -1.0;  // <0: 1e-3 when n > p, else 1e-2
  double a = 3.7;
  std::vector<double> lambdas;  // explicit grid overrides the default
};

struct BaselineResult {
  VectorXd beta;  // original covariate scale
  double intercept = 0.0;
  IndexList active_set;
  double lambda = 0.0;
  double bic = 0.0;
  std::vector<double> lambdas;
  std::vector<double> bics;
  std::vector<int> dfs;
};

/// SCAD on (x, y) with lambda picked by n log(RSS/n) + df log n.
BaselineResult scad_bic(const MatrixXd& x, const VectorXd& y, const BaselineOptions& options = {});

/// Complete-case SCAD. Throws NoCompleteGroup.
BaselineResult baseline_cc_scad(const DataSet& data, const PatternIndex& idx, const BaselineOptions& options = {});

/// SCAD on the matrix completed by single imputation from the complete cases.
/// Throws NoCompleteGroup.
BaselineResult baseline_si_scad(const DataSet& data, const PatternIndex& idx, const BaselineOptions& options = {},
                                const ImputationOptions& imputation = {});

}  // namespace mbi
