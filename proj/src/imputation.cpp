#include "mbi/imputation.hpp"

#include "mbi/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>

namespace mbi {

double ConditionalModel::predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  double eta = intercept;
  for (std::size_t c = 0; c < predictors.size(); ++c) {
    eta += coefficients(static_cast<Index>(c)) * row(predictors[c]);
  }
  if (family == Family::Gaussian) return eta;
  return low + (high - low) * logistic(eta);
}

Family column_family(const DataSet& data, int col) {
  std::set<double> distinct;
  for (Index i = 0; i < data.rows(); ++i) {
    if (!data.observed(i, col)) continue;
    distinct.insert(data.values()(i, col));
    if (distinct.size() > 2) return Family::Gaussian;
  }
  return distinct.size() == 2 ? Family::Binomial : Family::Gaussian;
}

namespace {

// Least squares with intercept on centred predictors. Returns false when the
// centred Gram matrix is numerically singular.
bool fit_least_squares(const MatrixXd& x, const VectorXd& y, double rcond_floor,
                       ConditionalModel& model) {
  const Index n = x.rows(), p = x.cols();
  const Standardizer st(x);
  if ((st.scale.array() == 0.0).any()) return false;
  const MatrixXd xs = st.apply(x);
  const MatrixXd gram = (xs.transpose() * xs) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double lmin = eig.eigenvalues().minCoeff();
  if (!(lmax > 0.0) || lmin / lmax < rcond_floor) return false;
  const double ybar = y.mean();
  const VectorXd b = xs.colPivHouseholderQr().solve(VectorXd(y.array() - ybar));
  model.coefficients.resize(p);
  model.intercept = ybar;
  for (Index j = 0; j < p; ++j) {
    model.coefficients(j) = b(j) / st.scale(j);
    model.intercept -= model.coefficients(j) * st.mean(j);
  }
  return true;
}

}  // namespace

ConditionalModel fit_conditional_on_rows(const DataSet& data, const IndexList& rows, int target,
                                         const IndexList& predictors,
                                         const ImputationOptions& options) {
  if (rows.empty()) {
    throw Error(ErrorCode::NoDonorRows,
                "no rows observe column " + data.column_names()[target] + " with its predictors");
  }
  ConditionalModel model;
  model.target = target;
  model.predictors = predictors;
  model.pooled_rows = rows;
  model.coefficients = VectorXd::Zero(static_cast<Index>(predictors.size()));
  model.family = column_family(data, target);

  const MatrixXd x = gather_columns(gather_rows(data.values(), rows), predictors);
  VectorXd y(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) y(static_cast<Index>(i)) = data.values()(rows[i], target);

  const double ymin = y.minCoeff(), ymax = y.maxCoeff();
  if (ymax - ymin <= 1e-12 * std::max(1.0, std::abs(ymax))) {
    // Constant on the pooled rows: intercept-only.
    model.family = Family::Gaussian;
    model.intercept = y.mean();
    return model;
  }

  const bool unregularized = static_cast<double>(rows.size()) > options.ols_ratio * static_cast<double>(predictors.size());
  if (model.family == Family::Binomial) {
    // Levels come from the whole observed column so every model of the same
    // target shares them.
    double lo = ymin, hi = ymax;
    for (Index i = 0; i < data.rows(); ++i) {
      if (!data.observed(i, target)) continue;
      lo = std::min(lo, data.values()(i, target));
      hi = std::max(hi, data.values()(i, target));
    }
    model.low = lo;
    model.high = hi;
    const VectorXd y01 = (y.array() - lo) / (hi - lo);
    LogisticFit fit = unregularized ? fit_logistic(x, y01, options.logistic)
                                    : fit_logistic_lasso(x, y01, options.lasso);
    model.regularized = !unregularized;
    model.intercept = fit.intercept;
    model.coefficients = fit.coefficients;
    model.lambda = fit.lambda;
    return model;
  }

  if (unregularized) {
    if (fit_least_squares(x, y, options.singular_rcond, model)) return model;
    std::clog << "warning: SingularDesign for target " << data.column_names()[target]
              << " on " << rows.size() << " rows; using the L1 route\n";
    model.fallback = true;
  }
  const LassoFit fit = fit_lasso(x, y, options.lasso);
  model.regularized = true;
  model.intercept = fit.intercept;
  model.coefficients = fit.coefficients;
  model.lambda = fit.lambda;
  return model;
}

ConditionalModel fit_conditional(const DataSet& data, const PatternIndex& idx, int r, int k, int j,
                                 const ImputationOptions& options) {
  const auto& group = idx.groups.at(r);
  if (!std::binary_search(group.missing.begin(), group.missing.end(), j)) {
    throw Error(ErrorCode::InvalidArgument, "target is not missing in the group");
  }
  const IndexList& predictors = idx.overlap(r, k);
  return fit_conditional_on_rows(data, pooled_rows(idx, j, predictors), j, predictors, options);
}

ModelSet fit_models(const DataSet& data, const PatternIndex& idx, const ImputationOptions& options) {
  ModelSet models;
  for (int r = 0; r < idx.num_groups(); ++r) {
    const auto& g = idx.groups[r];
    if (g.complete()) continue;
    for (int k : g.donors) {
      for (int j : g.missing) models.emplace(ModelKey{r, k, j}, fit_conditional(data, idx, r, k, j, options));
    }
  }
  return models;
}

namespace {

ImputedView make_view(const DataSet& data, const PatternIndex& idx, int r, int k,
                      const ModelSet& models) {
  const auto& g = idx.groups[r];
  ImputedView view;
  view.group = r;
  view.donor = k;
  view.rows = g.members;
  view.columns = idx.groups[k].observed;
  view.values = gather_rows(data.values(), g.members);
  for (int j : g.missing) {
    auto it = models.find(ModelKey{r, k, j});
    if (it == models.end()) {
      throw Error(ErrorCode::InvalidArgument, "no imputation model for group " + std::to_string(r + 1) +
                                                  ", donor " + std::to_string(k + 1) + ", column " +
                                                  data.column_names()[j]);
    }
    for (Index i = 0; i < view.values.rows(); ++i) {
      view.values(i, j) = it->second.predict(view.values.row(i));
    }
  }
  return view;
}

}  // namespace

ImputationSet build_views(const DataSet& data, const PatternIndex& idx, ModelSet models) {
  ImputationSet set;
  set.views.resize(idx.num_groups());
  for (int r = 0; r < idx.num_groups(); ++r) {
    for (int k : idx.groups[r].donors) set.views[r].push_back(make_view(data, idx, r, k, models));
  }
  set.models = std::move(models);
  return set;
}

ImputationSet impute(const DataSet& data, const PatternIndex& idx, const ImputationOptions& options) {
  return build_views(data, idx, fit_models(data, idx, options));
}

ImputationSet impute_single(const DataSet& data, const PatternIndex& idx,
                            const ImputationOptions& options) {
  if (!idx.complete_group) throw Error(ErrorCode::NoCompleteGroup, "single imputation needs complete cases");
  const int c = *idx.complete_group;
  const IndexList& complete_rows = idx.groups[c].members;
  ImputationSet set;
  set.views.resize(idx.num_groups());
  for (int r = 0; r < idx.num_groups(); ++r) {
    const auto& g = idx.groups[r];
    for (int j : g.missing) {
      set.models.emplace(ModelKey{r, c, j},
                         fit_conditional_on_rows(data, complete_rows, j, g.observed, options));
    }
    set.views[r].push_back(make_view(data, idx, r, r == c ? r : c, set.models));
  }
  return set;
}

}  // namespace mbi
