#include "mbi/estimating.hpp"

#include "mbi/error.hpp"

namespace mbi {

MomentSystem::MomentSystem(const PatternIndex& idx, const ImputationSet& views,
                           const VectorXd& response, int min_group_size, bool intercept)
    : p_(idx.num_covariates),
      n_(static_cast<int>(idx.group_of.size())),
      intercept_(intercept),
      complete_(idx.complete_group) {
  if (views.num_groups() != idx.num_groups()) {
    throw Error(ErrorCode::DimensionMismatch, "imputation set does not match the pattern index");
  }
  for (int r = 0; r < idx.num_groups(); ++r) {
    const auto& pg = idx.groups[r];
    if (pg.size() < std::max(min_group_size, 1)) continue;
    GroupMoments gm;
    gm.group = r;
    gm.y = gather(response, pg.members);
    int offset = 0;
    for (int pos = 0; pos < pg.donor_count(); ++pos) {
      const ImputedView& view = views.view(r, pos);
      const int k = pg.donors[pos];
      const IndexList& cols = idx.groups[k].observed;
      if (view.donor != k || view.columns != cols || view.values.cols() != p_ ||
          view.values.rows() != pg.size()) {
        throw Error(ErrorCode::DimensionMismatch, "view for group " + std::to_string(r + 1) +
                                                      ", donor " + std::to_string(k + 1) +
                                                      " does not match a(k)");
      }
      gm.donors.push_back(k);
      gm.offsets.push_back(offset);
      const int extra = intercept ? 1 : 0;
      gm.dims.push_back(static_cast<int>(cols.size()) + extra);
      gm.columns.push_back(cols);
      MatrixXd z = gather_columns(view.values, cols);
      MatrixXd x = view.values;
      if (intercept) {
        z.conservativeResize(Eigen::NoChange, z.cols() + 1);
        z.col(z.cols() - 1).setOnes();
        x.conservativeResize(Eigen::NoChange, x.cols() + 1);
        x.col(x.cols() - 1).setOnes();
      }
      gm.z.push_back(std::move(z));
      gm.x.push_back(std::move(x));
      offset += gm.dims.back();
    }
    total_dim_ += offset;
    groups_.push_back(std::move(gm));
  }
}

GroupStack moment_vector(const GroupMoments& group, const VectorXd& beta) {
  GroupStack out;
  out.samples.resize(group.rows(), group.dim());
  for (int d = 0; d < group.num_donors(); ++d) {
    const VectorXd resid = group.y - group.x[d] * beta;
    out.samples.middleCols(group.offsets[d], group.dims[d]) = resid.asDiagonal() * group.z[d];
  }
  out.mean = out.samples.colwise().mean().transpose();
  return out;
}

MatrixXd weight_block(const MatrixXd& samples) {
  const Index d = samples.cols();
  MatrixXd w = MatrixXd::Zero(d, d);
  w.selfadjointView<Eigen::Lower>().rankUpdate(samples.transpose(), 1.0 / static_cast<double>(samples.rows()));
  w.triangularView<Eigen::StrictlyUpper>() = w.transpose();
  return w;
}

MatrixXd moment_jacobian(const GroupMoments& group) {
  MatrixXd jac(group.dim(), group.x.empty() ? 0 : group.x.front().cols());
  const double n = static_cast<double>(group.rows());
  for (int d = 0; d < group.num_donors(); ++d) {
    jac.middleRows(group.offsets[d], group.dims[d]) = -(group.z[d].transpose() * group.x[d]) / n;
  }
  return jac;
}

MatrixXd EstimatingSystem::weight() const {
  MatrixXd w = MatrixXd::Zero(total_dim, total_dim);
  for (std::size_t r = 0; r < weights.size(); ++r) {
    const Index off = group_offsets[r];
    w.block(off, off, weights[r].rows(), weights[r].cols()) = weights[r];
  }
  return w;
}

EstimatingSystem evaluate_system(const MomentSystem& system, const VectorXd& beta) {
  EstimatingSystem es;
  es.total_dim = system.total_dim();
  es.g.resize(es.total_dim);
  int offset = 0;
  for (const auto& gm : system.groups()) {
    GroupStack stack = moment_vector(gm, beta);
    es.group_offsets.push_back(offset);
    for (int d = 0; d < gm.num_donors(); ++d) {
      es.blocks.push_back({gm.group, gm.donors[d], offset + gm.offsets[d], gm.dims[d]});
    }
    es.g.segment(offset, gm.dim()) = stack.mean;
    es.weights.push_back(weight_block(stack.samples));
    offset += gm.dim();
  }
  return es;
}

}  // namespace mbi
