#pragma once

#include "mbi/lasso.hpp"
#include "mbi/logistic.hpp"
#include "mbi/patterns.hpp"

#include <compare>
#include <map>
#include <string>
#include <vector>

namespace mbi {

enum class Family { Gaussian, Binomial };

/// Fitted E(X_target | X_predictors).
struct ConditionalModel {
  int target = 0;
  IndexList predictors;
  Family family = Family::Gaussian;
  double intercept = 0.0;
  VectorXd coefficients;  // one per predictor, original scale
  bool regularized = false;
  bool fallback = false;   // unregularized route was singular, L1 used instead
  double lambda = 0.0;
  IndexList pooled_rows;
  // Binary targets are modelled on {low, high}; the prediction is the
  // conditional expectation low + (high - low) * P(high).
  double low = 0.0;
  double high = 1.0;

  /// `row` is a full covariate row; only predictor columns are read.
  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
};

struct ImputationOptions {
  LassoOptions lasso;
  LogisticOptions logistic;
  double singular_rcond = 1e-10;
  double ols_ratio = 1.0;  // least squares when pooled rows > ols_ratio * |predictors|
};

/// Binary iff the observed values take at most two distinct values.
Family column_family(const DataSet& data, int col);

/// Fits the model on the given rows. Chooses the unregularized route when
/// rows > |predictors|, else the L1 route.
ConditionalModel fit_conditional_on_rows(const DataSet& data, const IndexList& rows, int target,
                                         const IndexList& predictors,
                                         const ImputationOptions& options = {});

/// E(X_j | X_{J(r,k)}) pooled over every row observing j and J(r,k).
ConditionalModel fit_conditional(const DataSet& data, const PatternIndex& idx, int r, int k, int j,
                                 const ImputationOptions& options = {});

struct ModelKey {
  int group = 0;
  int donor = 0;
  int target = 0;
  auto operator<=>(const ModelKey&) const = default;
};
using ModelSet = std::map<ModelKey, ConditionalModel>;

/// Rows H(r) imputed with donor k: observed entries pass through, entries in
/// m(r) hold model predictions. `values` is n_r x p and fully populated.
struct ImputedView {
  int group = 0;
  int donor = 0;
  IndexList rows;
  IndexList columns;  // a(k)
  MatrixXd values;
};

struct ImputationSet {
  std::vector<std::vector<ImputedView>> views;  // [group][donor position]
  ModelSet models;

  const ImputedView& view(int r, int donor_pos) const { return views.at(r).at(donor_pos); }
  int num_groups() const { return static_cast<int>(views.size()); }
};

/// Every (r, k in G(r), j in m(r)) model.
ModelSet fit_models(const DataSet& data, const PatternIndex& idx, const ImputationOptions& options = {});

ImputationSet build_views(const DataSet& data, const PatternIndex& idx, ModelSet models);

/// Multiple block-wise imputation: fit_models followed by build_views.
ImputationSet impute(const DataSet& data, const PatternIndex& idx, const ImputationOptions& options = {});

/// Single imputation from the complete-case group only: one view per group.
ImputationSet impute_single(const DataSet& data, const PatternIndex& idx,
                            const ImputationOptions& options = {});

}  // namespace mbi
