#include "mbi/gmm.hpp"

#include "mbi/error.hpp"

#include <cmath>
#include <limits>

namespace mbi {

namespace {

MatrixXd gram(const MatrixXd& u) {
  const Index t = u.cols();
  MatrixXd s = MatrixXd::Zero(t, t);
  s.selfadjointView<Eigen::Lower>().rankUpdate(u.transpose(), 1.0 / static_cast<double>(u.rows()));
  return s;
}

// mean^T S^{-1} mean with S given by its lower triangle.
double quadratic_form(const MatrixXd& s_lower, const VectorXd& mean, VectorXd* w = nullptr) {
  Eigen::LLT<MatrixXd, Eigen::Lower> llt(s_lower);
  VectorXd sol;
  if (llt.info() == Eigen::Success) {
    sol = llt.solve(mean);
  } else {
    // Numerically singular weight: pseudo-inverse on the nonzero spectrum.
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(s_lower.selfadjointView<Eigen::Lower>());
    const VectorXd& ev = es.eigenvalues();
    const double cut = 1e-12 * std::max(ev.maxCoeff(), 0.0);
    // A zero weight means every sample moment vanished, so the mean did too.
    if (!(ev.maxCoeff() > 0.0)) {
      if (w) *w = VectorXd::Zero(mean.size());
      return 0.0;
    }
    VectorXd proj = es.eigenvectors().transpose() * mean;
    for (Index i = 0; i < proj.size(); ++i) proj(i) = ev(i) > cut ? proj(i) / ev(i) : 0.0;
    sol = es.eigenvectors() * proj;
  }
  const double q = mean.dot(sol);
  if (w) *w = std::move(sol);
  return q;
}

double penalty_derivative(double b, const PenaltySpec& spec) {
  // Central difference of p(|b|); symmetric around zero.
  const double h = 1e-6 * std::max(1.0, std::abs(b));
  return (scad(std::abs(b + h), spec) - scad(std::abs(b - h), spec)) / (2.0 * h);
}

}  // namespace

GmmObjective::GmmObjective(const MomentSystem& system, PenaltySpec penalty, GmmOptions options)
    : system_(system), penalty_(penalty), options_(options) {
  penalty_.validate();
  set_identity();
}

void GmmObjective::set_identity() {
  reduction_.groups.clear();
  blocks_.clear();
  for (const auto& gm : system_.groups()) {
    GroupReduction red;
    red.group = gm.group;
    red.split = split_moments(gm, system_.complete_group());
    red.u = MatrixXd::Identity(gm.dim(), gm.dim());
    reduction_.groups.push_back(std::move(red));
    Block b;
    for (int d = 0; d < gm.num_donors(); ++d) {
      MatrixXd zu = MatrixXd::Zero(gm.rows(), gm.dim());
      zu.middleCols(gm.offsets[d], gm.dims[d]) = gm.z[d];
      b.zu.push_back(std::move(zu));
    }
    blocks_.push_back(std::move(b));
  }
}

void GmmObjective::refresh(const VectorXd& beta) {
  if (!options_.reduce) return;
  saved_ = Saved{reduction_, blocks_};
  reduction_ = build_reduction(system_, beta, options_.reduction);
  const auto& groups = system_.groups();
  for (std::size_t r = 0; r < groups.size(); ++r) {
    const auto& gm = groups[r];
    const MatrixXd& u = reduction_.groups[r].u;
    Block& b = blocks_[r];
    for (int d = 0; d < gm.num_donors(); ++d) {
      b.zu[d] = gm.z[d] * u.middleCols(gm.offsets[d], gm.dims[d]).transpose();
    }
  }
}

void GmmObjective::rollback() {
  if (!saved_) return;
  reduction_ = std::move(saved_->reduction);
  blocks_ = std::move(saved_->blocks);
  saved_.reset();
}

MatrixXd GmmObjective::reduced_samples(int r, const VectorXd& beta) const {
  const auto& gm = system_.groups()[r];
  const Block& b = blocks_[r];
  MatrixXd u = MatrixXd::Zero(gm.rows(), b.zu.front().cols());
  for (int d = 0; d < gm.num_donors(); ++d) {
    const VectorXd resid = gm.y - gm.x[d] * beta;
    u.noalias() += resid.asDiagonal() * b.zu[d];
  }
  return u;
}

std::vector<double> GmmObjective::group_losses(const VectorXd& beta) const {
  ++evaluations_;
  std::vector<double> out;
  for (std::size_t r = 0; r < blocks_.size(); ++r) {
    const MatrixXd u = reduced_samples(static_cast<int>(r), beta);
    const VectorXd mean = u.colwise().mean().transpose();
    out.push_back(quadratic_form(gram(u), mean));
  }
  return out;
}

double GmmObjective::loss(const VectorXd& beta) const {
  double total = 0.0;
  for (double v : group_losses(beta)) total += v;
  return total;
}

double GmmObjective::value(const VectorXd& beta) {
  return loss(beta) + scad_sum(beta.head(system_.num_covariates()), penalty_);
}

VectorXd GmmObjective::loss_gradient(const VectorXd& beta) const {
  ++evaluations_;
  VectorXd grad = VectorXd::Zero(beta.size());
  for (std::size_t r = 0; r < blocks_.size(); ++r) {
    const auto& gm = system_.groups()[r];
    const MatrixXd u = reduced_samples(static_cast<int>(r), beta);
    const VectorXd mean = u.colwise().mean().transpose();
    VectorXd w;
    if (!std::isfinite(quadratic_form(gram(u), mean, &w))) {
      throw Error(ErrorCode::NonFiniteObjective, "reduced weight matrix is not positive definite");
    }
    // d f / d beta = -(2/n) sum_k X_k^T ((1 - u w) o (ZU_k w))
    const VectorXd factor = VectorXd::Ones(gm.rows()) - u * w;
    for (int d = 0; d < gm.num_donors(); ++d) {
      const VectorXd q = blocks_[r].zu[d] * w;
      grad.noalias() -= (2.0 / gm.rows()) * (gm.x[d].transpose() * factor.cwiseProduct(q));
    }
  }
  return grad;
}

VectorXd GmmObjective::gradient(const VectorXd& beta) {
  const Index p = system_.num_covariates();
  if (!options_.orthant) {
    if (options_.gradient == GradientMode::Numeric) return CgProblem::gradient(beta);
    VectorXd grad = loss_gradient(beta);
    if (penalty_.lambda > 0.0) {
      for (Index j = 0; j < p; ++j) grad(j) += penalty_derivative(beta(j), penalty_);
    }
    return grad;
  }
  VectorXd grad = options_.gradient == GradientMode::Numeric
                      ? numeric_gradient([this](const VectorXd& b) { return loss(b); }, beta)
                      : loss_gradient(beta);
  const double l = penalty_.lambda;
  for (Index j = 0; j < p; ++j) {
    if (beta(j) != 0.0) {
      grad(j) += (beta(j) > 0.0 ? 1.0 : -1.0) * scad_prime(std::abs(beta(j)), penalty_);
    } else if (grad(j) + l < 0.0) {
      grad(j) += l;
    } else if (grad(j) - l > 0.0) {
      grad(j) -= l;
    } else {
      grad(j) = 0.0;
    }
  }
  return grad;
}

void GmmObjective::project(const VectorXd& beta, const VectorXd& gradient, VectorXd& s) const {
  if (!options_.orthant) return;
  for (Index j = 0; j < system_.num_covariates(); ++j) {
    if (beta(j) == 0.0 && (gradient(j) == 0.0 || s(j) * gradient(j) > 0.0)) s(j) = 0.0;
  }
}

VectorXd GmmObjective::advance(const VectorXd& beta, const VectorXd& s, double alpha) const {
  VectorXd next = beta + alpha * s;
  if (!options_.orthant) return next;
  for (Index j = 0; j < system_.num_covariates(); ++j) {
    const double orth = beta(j) != 0.0 ? beta(j) : s(j);
    if (next(j) * orth <= 0.0) next(j) = 0.0;
  }
  return next;
}

LineFunction GmmObjective::line(const VectorXd& beta, const VectorXd& s) {
  // Along beta + alpha s every reduced sample is u_i - alpha v_i, so the
  // group mean is affine and the weight quadratic in alpha.
  struct Coeffs {
    VectorXd m0, mv;
    MatrixXd s0, cross, q;
  };
  std::vector<Coeffs> coeffs;
  for (std::size_t r = 0; r < blocks_.size(); ++r) {
    const auto& gm = system_.groups()[r];
    const Block& b = blocks_[r];
    const Index t = b.zu.front().cols();
    MatrixXd u0 = MatrixXd::Zero(gm.rows(), t);
    MatrixXd v = MatrixXd::Zero(gm.rows(), t);
    for (int d = 0; d < gm.num_donors(); ++d) {
      const VectorXd resid = gm.y - gm.x[d] * beta;
      const VectorXd dir = gm.x[d] * s;
      u0.noalias() += resid.asDiagonal() * b.zu[d];
      v.noalias() += dir.asDiagonal() * b.zu[d];
    }
    const double n = static_cast<double>(gm.rows());
    Coeffs c;
    c.m0 = u0.colwise().mean().transpose();
    c.mv = v.colwise().mean().transpose();
    c.s0 = gram(u0);
    c.q = gram(v);
    c.cross.noalias() = u0.transpose() * v / n;
    c.cross += c.cross.transpose().eval();
    coeffs.push_back(std::move(c));
  }
  const Index p = system_.num_covariates();
  // Beyond the first zero crossing the orthant clamp makes the path
  // piecewise linear; those steps are evaluated directly.
  double breakpoint = std::numeric_limits<double>::infinity();
  if (options_.orthant) {
    for (Index j = 0; j < p; ++j) {
      if (beta(j) != 0.0 && beta(j) * s(j) < 0.0) breakpoint = std::min(breakpoint, -beta(j) / s(j));
    }
  }
  return [this, coeffs = std::move(coeffs), b = VectorXd(beta.head(p)), d = VectorXd(s.head(p)), breakpoint, beta,
          s](double alpha) {
    if (alpha > breakpoint) return value(advance(beta, s, alpha));
    ++evaluations_;
    double total = scad_sum(b + alpha * d, penalty_);
    for (const auto& c : coeffs) {
      const MatrixXd sa = c.s0 - alpha * c.cross + (alpha * alpha) * c.q;
      total += quadratic_form(sa, c.m0 - alpha * c.mv);
    }
    return total;
  };
}

double unreduced_loss(const MomentSystem& system, const VectorXd& beta) {
  double total = 0.0;
  for (const auto& gm : system.groups()) {
    const GroupStack st = moment_vector(gm, beta);
    total += quadratic_form(weight_block(st.samples), st.mean);
  }
  return total;
}

}  // namespace mbi
