#pragma once

#include "mbi/estimating.hpp"
#include "mbi/optimizer.hpp"
#include "mbi/penalty.hpp"
#include "mbi/reduction.hpp"

#include <optional>
#include <vector>

namespace mbi {

enum class GradientMode {
  Analytic,  // closed-form gradient of the quadratic form, central differences for the penalty
  Numeric,   // central differences for the whole objective
};

struct GmmOptions {
  ReductionOptions reduction;
  bool reduce = true;  // false: U = identity everywhere
  GradientMode gradient = GradientMode::Analytic;
  // Orthant-wise treatment of the penalty kink at zero: zero coordinates get
  // the minimum-norm subgradient, directions are projected onto the orthant
  // of the current iterate and steps that cross zero stop at zero.
  bool orthant = true;
};

/// Penalized reduced GMM objective
///   f*(beta) = sum_r (U_r g_r)^T (U_r W_r U_r^T)^{-1} U_r g_r + sum_j p_lambda(|beta_j|).
/// U is rebuilt by `refresh` and frozen in between. An intercept parameter of
/// the moment system is not penalized.
class GmmObjective : public CgProblem {
 public:
  GmmObjective(const MomentSystem& system, PenaltySpec penalty, GmmOptions options = {});

  void refresh(const VectorXd& beta) override;
  void rollback() override;
  double value(const VectorXd& beta) override;
  VectorXd gradient(const VectorXd& beta) override;
  LineFunction line(const VectorXd& beta, const VectorXd& s) override;
  VectorXd advance(const VectorXd& beta, const VectorXd& s, double alpha) const override;
  void project(const VectorXd& beta, const VectorXd& gradient, VectorXd& s) const override;

  double loss(const VectorXd& beta) const;
  VectorXd loss_gradient(const VectorXd& beta) const;
  /// Per-group terms of the quadratic form.
  std::vector<double> group_losses(const VectorXd& beta) const;

  const ReductionMap& reduction() const { return reduction_; }
  const MomentSystem& system() const { return system_; }
  const PenaltySpec& penalty() const { return penalty_; }
  std::size_t evaluations() const { return evaluations_; }

 private:
  struct Block {
    std::vector<MatrixXd> zu;  // per donor: Z_k U_k^T, n x t
  };
  void set_identity();
  MatrixXd reduced_samples(int r, const VectorXd& beta) const;

  const MomentSystem& system_;
  PenaltySpec penalty_;
  GmmOptions options_;
  ReductionMap reduction_;
  std::vector<Block> blocks_;
  struct Saved {
    ReductionMap reduction;
    std::vector<Block> blocks;
  };
  std::optional<Saved> saved_;
  mutable std::size_t evaluations_ = 0;
};

/// g^T W^{-1} g without any reduction. Singular blocks use the
/// pseudo-inverse, as the objective does.
double unreduced_loss(const MomentSystem& system, const VectorXd& beta);

}  // namespace mbi
