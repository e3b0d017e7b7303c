#pragma once

#include "mbi/estimating.hpp"

#include <optional>
#include <vector>

namespace mbi {

/// Indices into g_i^{(r)}: `primary` holds the moments whose imputation uses
/// the complete-case group (all of them for the complete group itself);
/// `secondary` holds the rest. Either may be empty.
struct MomentSplit {
  IndexList primary;
  IndexList secondary;
};

MomentSplit split_moments(const GroupMoments& group, std::optional<int> complete_group);

/// BIC-type principal-component criterion
///   Psi(t) = sum_{j>t} lambda_j / tr + t log(n d) / (n d)
/// for eigenvalues sorted in decreasing order.
double pc_criterion(const VectorXd& eigenvalues_desc, int n, int t);

/// Smallest minimizer of Psi over t = 0..d, found by enumeration.
/// Throws ZeroTrace when tr(omega) is not positive.
int select_pc_count(const MatrixXd& omega, int n);

/// #{lambda_j > tr(omega) log(n d) / (n d)}.
int pc_threshold_count(const MatrixXd& omega, int n);

struct ReductionOptions {
  double trigger_rcond = 1e-8;  // below this a block is treated as near-singular
  double zero_eigenvalue = 1e-12;  // relative to the largest eigenvalue
};

/// U^{(r)} = [ U1, 0 ; -U2 V21 V11^{-1} U1, U2 ] expressed in the original
/// moment order of the group.
struct GroupReduction {
  int group = 0;
  MomentSplit split;
  MatrixXd u1;        // t1 x |primary|
  MatrixXd u2;        // t2 x |secondary|
  MatrixXd coupling;  // V21 V11^{-1}, |secondary| x t1
  MatrixXd u;         // (t1 + t2) x d
  bool primary_reduced = false;
  bool secondary_reduced = false;

  int t1() const { return static_cast<int>(u1.rows()); }
  int t2() const { return static_cast<int>(u2.rows()); }
  int rows() const { return static_cast<int>(u.rows()); }
};

struct ReductionMap {
  std::vector<GroupReduction> groups;  // parallel to MomentSystem::groups()

  MatrixXd global() const;  // diag(U^{(1)}, ..., U^{(R)})
  int rows() const;
};

GroupReduction reduce_group(const MatrixXd& weight, const MomentSplit& split, int n,
                            const ReductionOptions& options = {});

ReductionMap build_reduction(const MomentSystem& system, const VectorXd& beta,
                             const ReductionOptions& options = {});

/// Largest |sample covariance(g2bar, h)| entry for one group and the scale it
/// should be compared against (largest |entry| of the moment covariance).
struct OrthogonalityCheck {
  double max_abs = 0.0;
  double scale = 0.0;
};
OrthogonalityCheck orthogonality_residual(const MatrixXd& samples, const GroupReduction& red);

/// Reciprocal condition (min/max eigenvalue) of a symmetric matrix; 0 when the
/// matrix is empty-valued or indefinite.
double reciprocal_condition(const MatrixXd& symmetric);

}  // namespace mbi
