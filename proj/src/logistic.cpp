#include "mbi/logistic.hpp"

#include <algorithm>
#include <cmath>

namespace mbi {

double logistic(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

LogisticFit fit_logistic(const MatrixXd& x, const VectorXd& y, const LogisticOptions& options) {
  const Index n = x.rows(), p = x.cols();
  const Standardizer st(x);
  const MatrixXd xs = st.apply(x);
  MatrixXd design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = xs;

  VectorXd theta = VectorXd::Zero(p + 1);
  const double ybar = std::clamp(y.mean(), 1e-6, 1 - 1e-6);
  theta(0) = std::log(ybar / (1 - ybar));
  LogisticFit fit;
  for (int it = 0; it < options.max_iterations; ++it) {
    const VectorXd eta = design * theta;
    VectorXd mu(n), w(n);
    for (Index i = 0; i < n; ++i) {
      mu(i) = logistic(eta(i));
      w(i) = std::max(mu(i) * (1 - mu(i)), 1e-10);
    }
    MatrixXd h = design.transpose() * w.asDiagonal() * design;
    h.diagonal().tail(p).array() += options.ridge * static_cast<double>(n);
    const VectorXd grad = design.transpose() * (y - mu) - options.ridge * static_cast<double>(n) *
                                                                (VectorXd(p + 1) << 0, theta.tail(p)).finished();
    const VectorXd step = h.ldlt().solve(grad);
    theta += step;
    fit.iterations = it + 1;
    if (step.cwiseAbs().maxCoeff() < options.tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.coefficients = VectorXd::Zero(p);
  fit.intercept = theta(0);
  for (Index j = 0; j < p; ++j) {
    if (st.scale(j) > 0.0) {
      fit.coefficients(j) = theta(j + 1) / st.scale(j);
      fit.intercept -= fit.coefficients(j) * st.mean(j);
    }
  }
  return fit;
}

namespace {

struct L1LogisticPath {
  MatrixXd coefficients;  // p x L on the supplied scale
  VectorXd intercepts;
};

L1LogisticPath l1_logistic_path(const MatrixXd& x, const VectorXd& y,
                                const std::vector<double>& lambdas) {
  const Index n = x.rows(), p = x.cols();
  const double nd = static_cast<double>(n);
  L1LogisticPath out{MatrixXd::Zero(p, static_cast<Index>(lambdas.size())),
                     VectorXd::Zero(static_cast<Index>(lambdas.size()))};
  VectorXd beta = VectorXd::Zero(p);
  const double ybar = std::clamp(y.mean(), 1e-6, 1 - 1e-6);
  double b0 = std::log(ybar / (1 - ybar));
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    const double lambda = lambdas[l];
    for (int outer = 0; outer < 50; ++outer) {
      VectorXd eta = (x * beta).array() + b0;
      VectorXd w(n), z(n);
      for (Index i = 0; i < n; ++i) {
        const double mu = logistic(eta(i));
        w(i) = std::max(mu * (1 - mu), 1e-5);
        z(i) = eta(i) + (y(i) - mu) / w(i);
      }
      const VectorXd beta_old = beta;
      const double b0_old = b0;
      VectorXd resid = z - eta;
      for (int sweep = 0; sweep < 1000; ++sweep) {
        double max_delta = 0.0;
        const double d0 = resid.dot(w) / w.sum();
        b0 += d0;
        resid.array() -= d0;
        for (Index j = 0; j < p; ++j) {
          const double wj = x.col(j).cwiseAbs2().dot(w) / nd;
          if (wj <= 1e-24) continue;
          const double old = beta(j);
          const double grad = (x.col(j).array() * w.array() * resid.array()).sum() / nd;
          const double updated = soft_threshold(grad + wj * old, lambda) / wj;
          if (updated != old) {
            resid.noalias() -= (updated - old) * x.col(j);
            beta(j) = updated;
            max_delta = std::max(max_delta, std::abs(updated - old));
          }
        }
        if (max_delta < 1e-9 && std::abs(d0) < 1e-9) break;
      }
      const double change = std::max((beta - beta_old).cwiseAbs().maxCoeff(), std::abs(b0 - b0_old));
      if (change < 1e-8) break;
    }
    out.coefficients.col(static_cast<Index>(l)) = beta;
    out.intercepts(static_cast<Index>(l)) = b0;
  }
  return out;
}

double deviance(const VectorXd& y, const VectorXd& eta) {
  double d = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    const double mu = std::clamp(logistic(eta(i)), 1e-12, 1 - 1e-12);
    d -= 2.0 * (y(i) * std::log(mu) + (1 - y(i)) * std::log(1 - mu));
  }
  return d;
}

}  // namespace

LogisticFit fit_logistic_lasso(const MatrixXd& x, const VectorXd& y, const LassoOptions& options) {
  const Index n = x.rows(), p = x.cols();
  LogisticFit fit;
  fit.coefficients = VectorXd::Zero(p);
  const double ybar = std::clamp(y.mean(), 1e-6, 1 - 1e-6);
  fit.intercept = std::log(ybar / (1 - ybar));
  if (n < 2 || p == 0) return fit;
  const Standardizer st(x);
  const MatrixXd xs = st.apply(x);
  const double lmax = lasso_lambda_max(xs, y);
  if (!(lmax > 0.0)) return fit;
  const double ratio = options.min_ratio > 0 ? options.min_ratio : (n > p ? 1e-4 : 1e-2);
  const auto grid = log_grid(lmax, lmax * ratio, options.path_length);
  const L1LogisticPath full = l1_logistic_path(xs, y, grid);

  const int k = std::min<int>(options.folds, static_cast<int>(n));
  std::vector<double> cv(grid.size(), 0.0);
  if (k >= 2) {
    const IndexList folds = make_folds(static_cast<int>(n), k, options.seed);
    for (int f = 0; f < k; ++f) {
      IndexList train, test;
      for (int i = 0; i < static_cast<int>(n); ++i) (folds[i] == f ? test : train).push_back(i);
      if (test.empty() || train.size() < 2) continue;
      const MatrixXd xtr = gather_rows(xs, train), xte = gather_rows(xs, test);
      const VectorXd ytr = gather(y, train), yte = gather(y, test);
      const L1LogisticPath path = l1_logistic_path(xtr, ytr, grid);
      for (std::size_t l = 0; l < grid.size(); ++l) {
        const VectorXd eta =
            (xte * path.coefficients.col(static_cast<Index>(l))).array() + path.intercepts(static_cast<Index>(l));
        cv[l] += deviance(yte, eta);
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t l = 1; l < grid.size(); ++l) {
    if (cv[l] < cv[best]) best = l;
  }
  fit.lambda = grid[best];
  fit.intercept = full.intercepts(static_cast<Index>(best));
  for (Index j = 0; j < p; ++j) {
    if (st.scale(j) > 0.0) {
      fit.coefficients(j) = full.coefficients(j, static_cast<Index>(best)) / st.scale(j);
      fit.intercept -= fit.coefficients(j) * st.mean(j);
    }
  }
  fit.converged = true;
  return fit;
}

}  // namespace mbi
