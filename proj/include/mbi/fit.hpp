#pragma once

#include "mbi/estimating.hpp"
#include "mbi/gmm.hpp"
#include "mbi/imputation.hpp"
#include "mbi/lasso.hpp"
#include "mbi/optimizer.hpp"
#include "mbi/patterns.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace mbi {

struct FitOptions {
  // Steps are capped at one unit per standardized coordinate.
  static CgOptions capped_cg() {
    CgOptions o;
    o.max_coordinate_step = 1.0;
    return o;
  }

  ImputationOptions imputation;
  GmmOptions gmm;
  CgOptions cg = capped_cg();
  LassoOptions initializer;
  double a = 3.7;
  double threshold = 1e-2;  // |beta_j| * sd_j below this is set to zero
  int min_group_size = 5;
  bool intercept = true;  // unpenalized constant in every estimating function
};

/// Everything that does not depend on lambda: the centered data, the pattern
/// index, the imputed views and the moment structure.
struct FitProblem {
  FitProblem(const DataSet& raw, const FitOptions& options = {});

  FitOptions options;
  VectorXd column_mean;
  VectorXd column_scale;     // observed population sd
  double response_mean = 0.0;
  DataSet data;              // covariates and response centered at observed means
  PatternIndex index;
  ImputationSet views;
  std::unique_ptr<MomentSystem> system;
};

/// Lasso on the complete cases (CV-tuned). Without a complete-case group the
/// largest group's observed columns are used and the rest start at zero.
/// Returns a full parameter vector (with the intercept last when enabled).
VectorXd initial_estimate(const FitProblem& problem);

struct GroupSummary {
  int group = 0;
  int t1 = 0;
  int t2 = 0;
  bool reduced = false;
  double orthogonality = 0.0;  // max |cov(g2bar, h)| / scale
};

struct FitResult {
  VectorXd beta;      // thresholded estimate, original covariate scale
  VectorXd raw_beta;  // CG output before thresholding, full parameter vector
  IndexList active_set;
  double intercept = 0.0;           // original scale
  double centered_intercept = 0.0;  // on the centered data
  int iterations = 0;
  int restarts = 0;
  bool converged = false;
  bool line_search_failed = false;
  std::vector<double> trace;
  std::vector<double> refreshed;
  int rollbacks = 0;
  double lambda = 0.0;
  double objective = 0.0;
  std::vector<GroupSummary> groups;
};

FitResult fit(const FitProblem& problem, double lambda, const std::optional<VectorXd>& start = std::nullopt);

/// Active set of the first p entries of `beta` under the problem's threshold rule.
IndexList active_coordinates(const FitProblem& problem, const VectorXd& beta);

/// Empirical covariance of the active coefficients
///   V = (V2 V1^{-1} V2^T)^{-1},
/// V1 = G*^T G* / N and V2 = d(1^T G* / N)/d beta_A for the transformed
/// moments G* = G U^T. `rows_per_group` optionally keeps only a subset of
/// transformed moments in each group (used for the single-imputation analogue).
/// An intercept parameter is treated as a nuisance: it enters the derivative
/// and is dropped from the returned matrix.
MatrixXd gmm_asymptotic_variance(const MomentSystem& system, const ReductionMap& reduction,
                                 const VectorXd& beta, const IndexList& active,
                                 const std::vector<IndexList>* rows_per_group = nullptr);

struct EfficiencyGap {
  MatrixXd v;         // MBI estimator
  MatrixXd v_single;  // estimator from the complete-case-imputed moments only
  double min_eigenvalue = 0.0;  // of v_single - v
  double scale = 0.0;           // ||v_single||_2
  bool psd = false;             // min_eigenvalue >= -1e-8 * scale
};

/// Requires a complete-case group (NoCompleteGroup otherwise).
EfficiencyGap efficiency_gap(const MomentSystem& system, const ReductionMap& reduction, const VectorXd& beta,
                             const IndexList& active);

}  // namespace mbi
