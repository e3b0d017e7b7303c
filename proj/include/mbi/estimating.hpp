#pragma once

#include "mbi/imputation.hpp"
#include "mbi/patterns.hpp"

#include <vector>

namespace mbi {

/// Affine structure of one group's stacked estimating functions:
/// g_i^{(r,k)}(beta) = z_i^{(k)} (y_i - x_i^{(k)} beta) for each donor k.
struct GroupMoments {
  int group = 0;
  IndexList donors;             // G(r)
  IndexList offsets;            // start of each donor block in g_i^{(r)}
  IndexList dims;               // |a(k)|
  std::vector<IndexList> columns;  // a(k)
  std::vector<MatrixXd> z;      // n_r x |a(k)|
  std::vector<MatrixXd> x;      // n_r x p imputed views
  VectorXd y;

  int rows() const { return static_cast<int>(y.size()); }
  int dim() const { return offsets.empty() ? 0 : offsets.back() + dims.back(); }
  int num_donors() const { return static_cast<int>(donors.size()); }
};

/// Per-group moment structures for every group with at least
/// `min_group_size` members; smaller groups contribute no moment block.
/// With `intercept`, a constant column is appended to every z and x, so the
/// parameter vector is (beta, beta_0) of length p + 1.
class MomentSystem {
 public:
  MomentSystem(const PatternIndex& idx, const ImputationSet& views, const VectorXd& response,
               int min_group_size = 5, bool intercept = false);

  const std::vector<GroupMoments>& groups() const { return groups_; }
  int total_dim() const { return total_dim_; }
  int num_covariates() const { return p_; }
  int num_parameters() const { return p_ + (intercept_ ? 1 : 0); }
  bool has_intercept() const { return intercept_; }
  int total_rows() const { return n_; }
  std::optional<int> complete_group() const { return complete_; }

 private:
  std::vector<GroupMoments> groups_;
  int total_dim_ = 0;
  int p_ = 0;
  int n_ = 0;
  bool intercept_ = false;
  std::optional<int> complete_;
};

struct GroupStack {
  VectorXd mean;     // g^{(r)}(beta)
  MatrixXd samples;  // n_r x d, row i = g_i^{(r)}(beta)
};

GroupStack moment_vector(const GroupMoments& group, const VectorXd& beta);

/// (1/n) sum_i g_i g_i^T, uncentered.
MatrixXd weight_block(const MatrixXd& samples);

/// d g^{(r)} / d beta, a d x p matrix independent of beta.
MatrixXd moment_jacobian(const GroupMoments& group);

struct MomentBlock {
  int group = 0;
  int donor = 0;
  int offset = 0;  // into the global moment vector
  int dim = 0;
};

/// g(beta) and block-diagonal W(beta) for every moment group.
struct EstimatingSystem {
  std::vector<MomentBlock> blocks;
  VectorXd g;
  std::vector<MatrixXd> weights;  // W^{(r)} per moment group
  IndexList group_offsets;
  int total_dim = 0;

  MatrixXd weight() const;  // dense block-diagonal W
};

EstimatingSystem evaluate_system(const MomentSystem& system, const VectorXd& beta);

}  // namespace mbi
