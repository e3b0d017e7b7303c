#include "mbi/fit.hpp"

#include "mbi/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace mbi {

namespace {

VectorXd observed_mean(const DataSet& raw) {
  VectorXd mean = VectorXd::Zero(raw.cols());
  for (Index j = 0; j < raw.cols(); ++j) {
    double sum = 0.0;
    Index count = 0;
    for (Index i = 0; i < raw.rows(); ++i) {
      if (raw.observed(i, j)) {
        sum += raw.values()(i, j);
        ++count;
      }
    }
    mean(j) = count > 0 ? sum / static_cast<double>(count) : 0.0;
  }
  return mean;
}

VectorXd observed_scale(const DataSet& raw, const VectorXd& mean) {
  VectorXd scale = VectorXd::Zero(raw.cols());
  for (Index j = 0; j < raw.cols(); ++j) {
    double ss = 0.0;
    Index count = 0;
    for (Index i = 0; i < raw.rows(); ++i) {
      if (raw.observed(i, j)) {
        const double d = raw.values()(i, j) - mean(j);
        ss += d * d;
        ++count;
      }
    }
    scale(j) = count > 0 ? std::sqrt(ss / static_cast<double>(count)) : 0.0;
  }
  return scale;
}

DataSet centered(const DataSet& raw, const VectorXd& mean, double response_mean) {
  MatrixXd values = raw.values();
  values.rowwise() -= mean.transpose();
  VectorXd y = raw.response().array() - response_mean;
  return DataSet(std::move(values), raw.mask(), std::move(y), raw.sources(), raw.column_names());
}

}  // namespace

FitProblem::FitProblem(const DataSet& raw, const FitOptions& opts)
    : options(opts),
      column_mean(observed_mean(raw)),
      column_scale(observed_scale(raw, column_mean)),
      response_mean(raw.response().mean()),
      data(centered(raw, column_mean, response_mean)) {
  index = detect_patterns(data);
  views = impute(data, index, options.imputation);
  system = std::make_unique<MomentSystem>(index, views, data.response(), options.min_group_size, options.intercept);
  if (system->groups().empty()) {
    throw Error(ErrorCode::InvalidArgument, "no pattern group reaches the minimum group size");
  }
}

VectorXd initial_estimate(const FitProblem& problem) {
  const PatternIndex& idx = problem.index;
  const Index p = problem.data.cols();
  int source = -1;
  if (idx.complete_group) {
    source = *idx.complete_group;
  } else {
    for (int r = 0; r < idx.num_groups(); ++r) {
      if (source < 0 || idx.groups[r].size() > idx.groups[source].size()) source = r;
    }
  }
  if (source < 0 || idx.groups[source].size() < 2 || idx.groups[source].observed.empty()) {
    throw Error(ErrorCode::InitFailed, "no rows available for the lasso initializer");
  }
  const auto& g = idx.groups[source];
  const MatrixXd x = gather_columns(gather_rows(problem.data.values(), g.members), g.observed);
  const VectorXd y = gather(problem.data.response(), g.members);
  const LassoFit lasso = fit_lasso(x, y, problem.options.initializer);
  VectorXd beta = VectorXd::Zero(problem.system->num_parameters());
  for (std::size_t c = 0; c < g.observed.size(); ++c) beta(g.observed[c]) = lasso.coefficients(static_cast<Index>(c));
  if (problem.system->has_intercept()) beta(p) = lasso.intercept;
  return beta;
}

IndexList active_coordinates(const FitProblem& problem, const VectorXd& beta) {
  IndexList active;
  for (Index j = 0; j < problem.data.cols(); ++j) {
    if (std::abs(beta(j)) * problem.column_scale(j) > problem.options.threshold) active.push_back(static_cast<int>(j));
  }
  return active;
}

FitResult fit(const FitProblem& problem, double lambda, const std::optional<VectorXd>& start) {
  const FitOptions& opts = problem.options;
  GmmObjective objective(*problem.system, PenaltySpec{lambda, opts.a}, opts.gmm);
  const VectorXd x0 = start ? *start : initial_estimate(problem);
  if (x0.size() != problem.system->num_parameters()) throw Error(ErrorCode::DimensionMismatch, "start vector has the wrong length");

  const CgResult cg = minimize_cg(objective, x0, opts.cg);

  FitResult res;
  res.lambda = lambda;
  res.raw_beta = cg.x;
  res.iterations = cg.iterations;
  res.restarts = cg.restarts;
  res.converged = cg.converged;
  res.line_search_failed = cg.line_search_failed;
  res.trace = cg.trace;
  res.refreshed = cg.refreshed;
  res.rollbacks = cg.rollbacks;
  res.objective = cg.value;
  res.active_set = active_coordinates(problem, cg.x);
  res.beta = VectorXd::Zero(problem.data.cols());
  for (int j : res.active_set) res.beta(j) = cg.x(j);
  res.centered_intercept = problem.system->has_intercept() ? cg.x(problem.data.cols()) : 0.0;
  res.intercept = problem.response_mean + res.centered_intercept - problem.column_mean.dot(res.beta);

  const MomentSystem& system = *problem.system;
  const ReductionMap map = opts.gmm.reduce ? build_reduction(system, cg.x, opts.gmm.reduction) : objective.reduction();
  for (std::size_t r = 0; r < system.groups().size(); ++r) {
    const GroupReduction& red = map.groups[r];
    GroupSummary s;
    s.group = system.groups()[r].group;
    s.t1 = red.t1();
    s.t2 = red.t2();
    s.reduced = red.primary_reduced || red.secondary_reduced;
    if (opts.gmm.reduce) {
      const OrthogonalityCheck oc = orthogonality_residual(moment_vector(system.groups()[r], cg.x).samples, red);
      s.orthogonality = oc.scale > 0.0 ? oc.max_abs / oc.scale : 0.0;
    }
    res.groups.push_back(s);
  }
  return res;
}

MatrixXd gmm_asymptotic_variance(const MomentSystem& system, const ReductionMap& reduction,
                                 const VectorXd& beta, const IndexList& active,
                                 const std::vector<IndexList>* rows_per_group) {
  if (active.empty()) return MatrixXd(0, 0);
  IndexList params = active;
  if (system.has_intercept()) params.push_back(system.num_covariates());
  const Index a = static_cast<Index>(params.size());
  const double big_n = static_cast<double>(system.total_rows());
  MatrixXd info = MatrixXd::Zero(a, a);
  const auto& groups = system.groups();
  for (std::size_t r = 0; r < groups.size(); ++r) {
    const GroupMoments& gm = groups[r];
    MatrixXd u = reduction.groups[r].u;
    if (rows_per_group) u = gather_rows(u, (*rows_per_group)[r]);
    if (u.rows() == 0) continue;
    const MatrixXd transformed = moment_vector(gm, beta).samples * u.transpose();  // n_r x t
    const MatrixXd v1 = transformed.transpose() * transformed / big_n;
    const MatrixXd d = (static_cast<double>(gm.rows()) / big_n) * (u * gather_columns(moment_jacobian(gm), params));
    Eigen::LDLT<MatrixXd> ldlt(v1);
    if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::SingularV1, "moment covariance is singular");
    info += d.transpose() * ldlt.solve(d);
  }
  Eigen::LDLT<MatrixXd> inv(info);
  if (inv.info() != Eigen::Success || !inv.isPositive() || reciprocal_condition(info) < 1e-14) {
    throw Error(ErrorCode::SingularV1, "information matrix of the active coefficients is singular");
  }
  const Index k = static_cast<Index>(active.size());
  return inv.solve(MatrixXd::Identity(a, a)).topLeftCorner(k, k);
}

EfficiencyGap efficiency_gap(const MomentSystem& system, const ReductionMap& reduction, const VectorXd& beta,
                             const IndexList& active) {
  if (!system.complete_group()) {
    throw Error(ErrorCode::NoCompleteGroup, "the efficiency comparison needs a complete-case group");
  }
  std::vector<IndexList> primary_rows;
  for (const auto& red : reduction.groups) {
    IndexList rows(static_cast<std::size_t>(red.t1()));
    for (int i = 0; i < red.t1(); ++i) rows[i] = i;
    primary_rows.push_back(std::move(rows));
  }
  EfficiencyGap gap;
  gap.v = gmm_asymptotic_variance(system, reduction, beta, active);
  gap.v_single = gmm_asymptotic_variance(system, reduction, beta, active, &primary_rows);
  if (gap.v.size() == 0) {
    gap.psd = true;
    return gap;
  }
  const MatrixXd diff = 0.5 * ((gap.v_single - gap.v) + (gap.v_single - gap.v).transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(diff, Eigen::EigenvaluesOnly);
  gap.min_eigenvalue = eig.eigenvalues().minCoeff();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig_single(gap.v_single, Eigen::EigenvaluesOnly);
  gap.scale = eig_single.eigenvalues().cwiseAbs().maxCoeff();
  gap.psd = gap.min_eigenvalue >= -1e-8 * gap.scale;
  return gap;
}

}  // namespace mbi
