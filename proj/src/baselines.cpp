#include "mbi/baselines.hpp"

#include "mbi/error.hpp"
#include "mbi/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mbi {

double scad_threshold(double z, double lambda, double a) {
  const double az = std::abs(z);
  if (az <= 2.0 * lambda) return soft_threshold(z, lambda);
  if (az <= a * lambda) return soft_threshold(z, a * lambda / (a - 1.0)) / (1.0 - 1.0 / (a - 1.0));
  return z;
}

ScadPath scad_path(const MatrixXd& x, const VectorXd& y, std::vector<double> lambdas, double a, double tolerance,
                   int max_sweeps) {
  const Index n = x.rows(), p = x.cols();
  std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
  const double ybar = y.mean();
  const VectorXd yc = y.array() - ybar;
  ScadPath path;
  std::vector<VectorXd> cols;
  VectorXd b = VectorXd::Zero(p);
  VectorXd r = yc;
  const double dn = static_cast<double>(n);
  const VectorXd col_ss = x.colwise().squaredNorm().transpose() / dn;
  for (double lambda : lambdas) {
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
      double max_change = 0.0;
      for (Index j = 0; j < p; ++j) {
        if (col_ss(j) <= 0.0) continue;
        const double z = x.col(j).dot(r) / dn + b(j) * col_ss(j);
        // Columns are standardized so col_ss is 1 up to rounding.
        const double nb = scad_threshold(z / col_ss(j), lambda / col_ss(j), a);
        const double delta = nb - b(j);
        if (delta != 0.0) {
          r.noalias() -= delta * x.col(j);
          b(j) = nb;
          max_change = std::max(max_change, std::abs(delta));
        }
      }
      if (max_change < tolerance) break;
    }
    path.lambdas.push_back(lambda);
    cols.push_back(b);
    const Index df = (b.array() != 0.0).count();
    if (df >= n - 1) break;
  }
  path.coefficients.resize(p, static_cast<Index>(cols.size()));
  path.intercepts = VectorXd::Constant(static_cast<Index>(cols.size()), ybar);
  for (std::size_t l = 0; l < cols.size(); ++l) path.coefficients.col(static_cast<Index>(l)) = cols[l];
  return path;
}

BaselineResult scad_bic(const MatrixXd& x, const VectorXd& y, const BaselineOptions& options) {
  const Index n = x.rows(), p = x.cols();
  BaselineResult res;
  res.beta = VectorXd::Zero(p);
  res.intercept = n > 0 ? y.mean() : 0.0;
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "SCAD needs at least two rows");
  const Standardizer st(x);
  const MatrixXd xs = st.apply(x);
  std::vector<double> grid = options.lambdas;
  if (grid.empty()) {
    double lmax = lasso_lambda_max(xs, y);
    if (!(lmax > 0.0)) lmax = 1.0;
    const double ratio = options.min_ratio > 0 ? options.min_ratio : (n > p ? 1e-3 : 1e-2);
    grid = log_grid(lmax, lmax * ratio, options.path_length);
  }
  const ScadPath path = scad_path(xs, y, grid, options.a);
  const double dn = static_cast<double>(n);
  int best = -1;
  for (std::size_t l = 0; l < path.lambdas.size(); ++l) {
    const VectorXd b = path.coefficients.col(static_cast<Index>(l));
    const double rss = (y.array() - path.intercepts(static_cast<Index>(l)) - (xs * b).array()).square().sum();
    const int df = static_cast<int>((b.array() != 0.0).count());
    const double bic = rss > 0.0 ? dn * std::log(rss / dn) + df * std::log(dn)
                                 : -std::numeric_limits<double>::infinity();
    res.lambdas.push_back(path.lambdas[l]);
    res.bics.push_back(bic);
    res.dfs.push_back(df);
    // Lambdas are decreasing, so strict improvement keeps the larger lambda on ties.
    if (best < 0 || bic < res.bics[static_cast<std::size_t>(best)]) best = static_cast<int>(l);
  }
  const VectorXd b = path.coefficients.col(best);
  res.lambda = path.lambdas[static_cast<std::size_t>(best)];
  res.bic = res.bics[static_cast<std::size_t>(best)];
  res.intercept = path.intercepts(best);
  for (Index j = 0; j < p; ++j) {
    if (b(j) != 0.0 && st.scale(j) > 0.0) {
      res.beta(j) = b(j) / st.scale(j);
      res.intercept -= res.beta(j) * st.mean(j);
      res.active_set.push_back(static_cast<int>(j));
    }
  }
  return res;
}

BaselineResult baseline_cc_scad(const DataSet& data, const PatternIndex& idx, const BaselineOptions& options) {
  if (!idx.complete_group) throw Error(ErrorCode::NoCompleteGroup, "CC-SCAD needs a complete-case group");
  const IndexList& rows = idx.groups[*idx.complete_group].members;
  return scad_bic(gather_rows(data.values(), rows), gather(data.response(), rows), options);
}

BaselineResult baseline_si_scad(const DataSet& data, const PatternIndex& idx, const BaselineOptions& options,
                                const ImputationOptions& imputation) {
  if (!idx.complete_group) throw Error(ErrorCode::NoCompleteGroup, "SI-SCAD needs a complete-case group");
  const ImputationSet single = impute_single(data, idx, imputation);
  MatrixXd completed(data.rows(), data.cols());
  for (int r = 0; r < idx.num_groups(); ++r) {
    const ImputedView& v = single.view(r, 0);
    for (std::size_t i = 0; i < v.rows.size(); ++i) completed.row(v.rows[i]) = v.values.row(static_cast<Index>(i));
  }
  return scad_bic(completed, data.response(), options);
}

}  // namespace mbi
