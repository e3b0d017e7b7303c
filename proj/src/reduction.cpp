#include "mbi/reduction.hpp"

#include "mbi/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace mbi {

MomentSplit split_moments(const GroupMoments& group, std::optional<int> complete_group) {
  MomentSplit split;
  for (int d = 0; d < group.num_donors(); ++d) {
    const bool primary = complete_group && group.donors[d] == *complete_group;
    for (int c = 0; c < group.dims[d]; ++c) {
      (primary ? split.primary : split.secondary).push_back(group.offsets[d] + c);
    }
  }
  return split;
}

namespace {

MatrixXd symmetrized(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

MatrixXd sub_block(const MatrixXd& m, const IndexList& rows, const IndexList& cols) {
  MatrixXd out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
  return out;
}

// Eigenpairs in decreasing eigenvalue order.
struct SortedEigen {
  VectorXd values;
  MatrixXd vectors;  // columns
};

SortedEigen sorted_eigen(const MatrixXd& omega) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(symmetrized(omega));
  SortedEigen out;
  out.values = eig.eigenvalues().reverse();
  out.vectors = eig.eigenvectors().rowwise().reverse();
  return out;
}

}  // namespace

double reciprocal_condition(const MatrixXd& symmetric) {
  if (symmetric.size() == 0) return 1.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(symmetrized(symmetric), Eigen::EigenvaluesOnly);
  const double hi = eig.eigenvalues().maxCoeff();
  const double lo = eig.eigenvalues().minCoeff();
  if (!(hi > 0.0) || lo <= 0.0) return 0.0;
  return lo / hi;
}

double pc_criterion(const VectorXd& eigenvalues_desc, int n, int t) {
  const Index d = eigenvalues_desc.size();
  const double trace = eigenvalues_desc.sum();
  const double nd = static_cast<double>(n) * static_cast<double>(d);
  const double tail = eigenvalues_desc.tail(d - t).sum();
  return tail / trace + t * std::log(nd) / nd;
}

int select_pc_count(const MatrixXd& omega, int n) {
  const SortedEigen eig = sorted_eigen(omega);
  const double trace = eig.values.sum();
  const double scale = std::max(1.0, eig.values.cwiseAbs().maxCoeff());
  if (!(trace > 1e-300 * scale) || !std::isfinite(trace)) {
    throw Error(ErrorCode::ZeroTrace, "principal component selection on a zero-trace matrix");
  }
  const int d = static_cast<int>(eig.values.size());
  int best = 0;
  double best_value = pc_criterion(eig.values, n, 0);
  for (int t = 1; t <= d; ++t) {
    const double v = pc_criterion(eig.values, n, t);
    if (v < best_value) {
      best_value = v;
      best = t;
    }
  }
  return best;
}

int pc_threshold_count(const MatrixXd& omega, int n) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(symmetrized(omega), Eigen::EigenvaluesOnly);
  const double trace = omega.trace();
  const double nd = static_cast<double>(n) * static_cast<double>(omega.rows());
  const double cut = trace * std::log(nd) / nd;
  return static_cast<int>((eig.eigenvalues().array() > cut).count());
}

namespace {

// Rows = leading eigenvectors of omega, or identity when omega is well
// conditioned. Sets `reduced` when principal components were taken.
MatrixXd component_rows(const MatrixXd& omega, int n, const ReductionOptions& options, bool& reduced) {
  const Index d = omega.rows();
  reduced = false;
  if (d == 0) return MatrixXd(0, 0);
  const SortedEigen eig = sorted_eigen(omega);
  const double top = eig.values(0);
  if (!(top > 0.0)) {
    reduced = true;
    return MatrixXd(0, d);
  }
  const double floor = options.zero_eigenvalue * top;
  const double bottom = eig.values(d - 1) <= floor ? 0.0 : eig.values(d - 1);
  if (bottom / top >= options.trigger_rcond) return MatrixXd::Identity(d, d);
  reduced = true;
  const int nonzero = static_cast<int>((eig.values.array() > floor).count());
  const int t = std::min(select_pc_count(omega, n), nonzero);
  return eig.vectors.leftCols(t).transpose();
}

}  // namespace

GroupReduction reduce_group(const MatrixXd& weight, const MomentSplit& split, int n,
                            const ReductionOptions& options) {
  GroupReduction red;
  red.split = split;
  const IndexList& p1 = split.primary;
  const IndexList& p2 = split.secondary;
  const Index d = weight.rows();

  const MatrixXd w11 = sub_block(weight, p1, p1);
  red.u1 = p1.empty() ? MatrixXd(0, 0) : component_rows(w11, n, options, red.primary_reduced);
  const Index t1 = red.u1.rows();

  MatrixXd omega2 = sub_block(weight, p2, p2);
  red.coupling = MatrixXd::Zero(static_cast<Index>(p2.size()), t1);
  if (t1 > 0 && !p2.empty()) {
    const MatrixXd v11 = red.u1 * w11 * red.u1.transpose();
    const MatrixXd v21 = sub_block(weight, p2, p1) * red.u1.transpose();
    const Eigen::LDLT<MatrixXd> v11_ldlt(symmetrized(v11));
    red.coupling = v11_ldlt.solve(v21.transpose()).transpose();
    omega2 -= red.coupling * v21.transpose();
  }
  if (!p2.empty() && !(omega2.trace() > options.zero_eigenvalue * sub_block(weight, p2, p2).trace())) {
    // The secondary moments are fully explained by h: nothing to add.
    red.u2 = MatrixXd(0, static_cast<Index>(p2.size()));
    red.secondary_reduced = true;
  } else {
    red.u2 = p2.empty() ? MatrixXd(0, 0) : component_rows(omega2, n, options, red.secondary_reduced);
  }
  const Index t2 = red.u2.rows();
  if (t1 + t2 == 0 && d > 0) {
    throw Error(ErrorCode::AllComponentsDropped,
                "every principal component was dropped; the moment covariance is degenerate");
  }

  red.u = MatrixXd::Zero(t1 + t2, d);
  for (std::size_t c = 0; c < p1.size(); ++c) {
    red.u.col(p1[c]).head(t1) = red.u1.col(static_cast<Index>(c));
  }
  if (t2 > 0) {
    const MatrixXd lower_left = -(red.u2 * red.coupling * red.u1);  // t2 x |p1|
    for (std::size_t c = 0; c < p1.size(); ++c) {
      red.u.col(p1[c]).tail(t2) = lower_left.col(static_cast<Index>(c));
    }
    for (std::size_t c = 0; c < p2.size(); ++c) {
      red.u.col(p2[c]).tail(t2) = red.u2.col(static_cast<Index>(c));
    }
  }
  return red;
}

ReductionMap build_reduction(const MomentSystem& system, const VectorXd& beta,
                             const ReductionOptions& options) {
  ReductionMap map;
  for (const auto& gm : system.groups()) {
    const GroupStack stack = moment_vector(gm, beta);
    GroupReduction red = reduce_group(weight_block(stack.samples), split_moments(gm, system.complete_group()),
                                      gm.rows(), options);
    red.group = gm.group;
    map.groups.push_back(std::move(red));
  }
  return map;
}

MatrixXd ReductionMap::global() const {
  Index rows = 0, cols = 0;
  for (const auto& g : groups) {
    rows += g.u.rows();
    cols += g.u.cols();
  }
  MatrixXd out = MatrixXd::Zero(rows, cols);
  Index r = 0, c = 0;
  for (const auto& g : groups) {
    out.block(r, c, g.u.rows(), g.u.cols()) = g.u;
    r += g.u.rows();
    c += g.u.cols();
  }
  return out;
}

int ReductionMap::rows() const {
  int total = 0;
  for (const auto& g : groups) total += g.rows();
  return total;
}

OrthogonalityCheck orthogonality_residual(const MatrixXd& samples, const GroupReduction& red) {
  OrthogonalityCheck check;
  const double n = static_cast<double>(samples.rows());
  check.scale = (samples.transpose() * samples / n).cwiseAbs().maxCoeff();
  if (red.t1() == 0 || red.split.secondary.empty()) return check;
  const MatrixXd g1 = gather_columns(samples, red.split.primary);
  const MatrixXd g2 = gather_columns(samples, red.split.secondary);
  const MatrixXd h = g1 * red.u1.transpose();                       // n x t1
  const MatrixXd g2bar = g2 - h * red.coupling.transpose();         // n x |p2|
  check.max_abs = (g2bar.transpose() * h / n).cwiseAbs().maxCoeff();
  return check;
}

}  // namespace mbi
