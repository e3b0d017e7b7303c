#include "mbi/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace mbi {

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

Standardizer::Standardizer(const MatrixXd& x) : mean(x.colwise().mean()), scale(x.cols()) {
  const double n = static_cast<double>(x.rows());
  for (Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - mean(j)).square().sum() / n;
    scale(j) = var > 1e-24 ? std::sqrt(var) : 0.0;
  }
}

MatrixXd Standardizer::apply(const MatrixXd& x) const {
  MatrixXd out(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    if (scale(j) > 0.0) {
      out.col(j) = (x.col(j).array() - mean(j)) / scale(j);
    } else {
      out.col(j).setZero();
    }
  }
  return out;
}

std::vector<double> log_grid(double high, double low, int count) {
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = high;
    return grid;
  }
  const double lh = std::log(high), ll = std::log(low);
  for (int i = 0; i < count; ++i) grid[i] = std::exp(lh + (ll - lh) * i / (count - 1));
  return grid;
}

double lasso_lambda_max(const MatrixXd& xs, const VectorXd& y) {
  if (xs.cols() == 0 || xs.rows() == 0) return 0.0;
  const VectorXd yc = y.array() - y.mean();
  return (xs.transpose() * yc).cwiseAbs().maxCoeff() / static_cast<double>(xs.rows());
}

IndexList make_folds(int n, int k, std::uint64_t seed) {
  IndexList order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  IndexList folds(n);
  for (int i = 0; i < n; ++i) folds[order[i]] = i % std::max(k, 1);
  return folds;
}

LassoPath lasso_path(const MatrixXd& x, const VectorXd& y, std::span<const double> lambdas,
                     double tolerance, int max_sweeps) {
  const Index n = x.rows(), p = x.cols();
  const double nd = static_cast<double>(n);
  LassoPath path;
  path.lambdas.assign(lambdas.begin(), lambdas.end());
  const Index L = static_cast<Index>(lambdas.size());
  path.coefficients = MatrixXd::Zero(p, L);
  path.intercepts = VectorXd::Zero(L);
  path.sweeps.assign(L, 0);
  if (n == 0) return path;

  const VectorXd xbar = x.colwise().mean();
  const double ybar = y.mean();
  const MatrixXd xc = x.rowwise() - xbar.transpose();
  const VectorXd yc = y.array() - ybar;
  const VectorXd w = xc.colwise().squaredNorm() / nd;
  const double y_scale = std::max(yc.squaredNorm() / nd, 1e-300);

  IndexList order(L);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return lambdas[a] > lambdas[b]; });

  VectorXd beta = VectorXd::Zero(p);
  VectorXd resid = yc;
  for (int li : order) {
    const double lambda = lambdas[li];
    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
      double max_delta = 0.0;
      for (Index j = 0; j < p; ++j) {
        if (w(j) <= 1e-24) continue;
        const double old = beta(j);
        const double z = xc.col(j).dot(resid) / nd + w(j) * old;
        const double updated = soft_threshold(z, lambda) / w(j);
        if (updated != old) {
          resid.noalias() -= (updated - old) * xc.col(j);
          beta(j) = updated;
          max_delta = std::max(max_delta, w(j) * (updated - old) * (updated - old));
        }
      }
      if (max_delta < tolerance * y_scale) break;
    }
    path.sweeps[li] = sweep + 1;
    path.coefficients.col(li) = beta;
    path.intercepts(li) = ybar - xbar.dot(beta);
  }
  return path;
}

LassoSelection lasso_coordinate_descent(const MatrixXd& xs, const VectorXd& ys,
                                        std::span<const double> lambdas, const IndexList& folds,
                                        double tolerance) {
  LassoSelection sel;
  sel.path = lasso_path(xs, ys, lambdas, tolerance);
  const Index L = static_cast<Index>(lambdas.size());
  sel.cv_error.assign(L, 0.0);
  const int k = folds.empty() ? 0 : *std::max_element(folds.begin(), folds.end()) + 1;
  if (k >= 2) {
    std::vector<double> total(L, 0.0);
    int counted = 0;
    for (int f = 0; f < k; ++f) {
      IndexList train, test;
      for (int i = 0; i < static_cast<int>(folds.size()); ++i) (folds[i] == f ? test : train).push_back(i);
      if (test.empty() || train.size() < 2) continue;
      const MatrixXd xtr = gather_rows(xs, train), xte = gather_rows(xs, test);
      const VectorXd ytr = gather(ys, train), yte = gather(ys, test);
      const LassoPath fold_path = lasso_path(xtr, ytr, lambdas, tolerance);
      for (Index l = 0; l < L; ++l) {
        const VectorXd pred =
            (xte * fold_path.coefficients.col(l)).array() + fold_path.intercepts(l);
        total[l] += (yte - pred).squaredNorm();
      }
      counted += static_cast<int>(test.size());
    }
    for (Index l = 0; l < L; ++l) sel.cv_error[l] = total[l] / std::max(counted, 1);
  } else {
    for (Index l = 0; l < L; ++l) {
      const VectorXd pred = (xs * sel.path.coefficients.col(l)).array() + sel.path.intercepts(l);
      sel.cv_error[l] = (ys - pred).squaredNorm() / std::max<Index>(ys.size(), 1);
    }
  }
  int best = 0;
  for (Index l = 1; l < L; ++l) {
    const double e = sel.cv_error[l], b = sel.cv_error[best];
    if (e < b || (e == b && lambdas[l] > lambdas[best])) best = static_cast<int>(l);
  }
  sel.selected = best;
  return sel;
}

LassoFit fit_lasso(const MatrixXd& x, const VectorXd& y, const LassoOptions& options) {
  const Index n = x.rows(), p = x.cols();
  LassoFit fit;
  fit.coefficients = VectorXd::Zero(p);
  fit.intercept = n > 0 ? y.mean() : 0.0;
  if (n < 2 || p == 0) return fit;

  const Standardizer st(x);
  const MatrixXd xs = st.apply(x);
  const double lmax = lasso_lambda_max(xs, y);
  if (!(lmax > 0.0)) return fit;  // constant response or constant predictors
  const double ratio = options.min_ratio > 0 ? options.min_ratio : (n > p ? 1e-4 : 1e-2);
  const auto grid = log_grid(lmax, lmax * ratio, options.path_length);
  const int k = std::min<int>(options.folds, static_cast<int>(n));
  const IndexList folds = k >= 2 ? make_folds(static_cast<int>(n), k, options.seed) : IndexList{};
  const LassoSelection sel = lasso_coordinate_descent(xs, y, grid, folds, options.tolerance);

  const VectorXd b = sel.path.coefficients.col(sel.selected);
  fit.lambda = grid[sel.selected];
  fit.intercept = sel.path.intercepts(sel.selected);
  for (Index j = 0; j < p; ++j) {
    if (st.scale(j) > 0.0) {
      fit.coefficients(j) = b(j) / st.scale(j);
      fit.intercept -= fit.coefficients(j) * st.mean(j);
    }
  }
  return fit;
}

}  // namespace mbi
