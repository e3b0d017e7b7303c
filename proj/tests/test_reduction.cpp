#include "mbi/error.hpp"
#include "mbi/gmm.hpp"
#include "mbi/reduction.hpp"
#include "support.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

using namespace mbi;
using mbi::testing::Gen;

namespace {

struct Built {
  DataSet data;
  PatternIndex idx;
  ImputationSet views;
};

Built five_groups(std::uint64_t seed, int per_group, bool with_complete = true) {
  Gen gen(seed);
  auto layouts = mbi::testing::five_group_layouts();
  if (!with_complete) layouts = {layouts[1], layouts[2], layouts[3]};
  const int n = per_group * static_cast<int>(layouts.size());
  MatrixXd x = gen.normal_matrix(n, 6);
  x.col(3) += 0.7 * x.col(0);
  x.col(5) += 0.6 * x.col(2);
  const VectorXd y = x.col(0) - 0.5 * x.col(3) + gen.normal_vector(n);
  DataSet d = mbi::testing::block_dataset(x, y, {2, 2, 2}, layouts, std::vector<int>(layouts.size(), per_group));
  PatternIndex idx = detect_patterns(d);
  ImputationSet views = impute(d, idx);
  return {std::move(d), std::move(idx), std::move(views)};
}

}  // namespace

TEST_CASE("moment split by donor") {
  const Built b = five_groups(1, 30);
  const MomentSystem sys(b.idx, b.views, b.data.response());
  const MomentSplit s2 = split_moments(sys.groups()[1], sys.complete_group());
  CHECK(s2.primary == IndexList{0, 1, 2, 3, 4, 5});
  CHECK(s2.secondary.size() == 8);
  const MomentSplit s1 = split_moments(sys.groups()[0], sys.complete_group());
  CHECK(s1.secondary.empty());
  CHECK(s1.primary.size() == 6);

  const Built nc = five_groups(2, 30, false);
  const MomentSystem sys2(nc.idx, nc.views, nc.data.response());
  for (const auto& g : sys2.groups()) CHECK(split_moments(g, sys2.complete_group()).primary.empty());
}

TEST_CASE("principal component count examples") {
  CHECK(select_pc_count(MatrixXd::Identity(4, 4), 100) == 4);
  CHECK(pc_threshold_count(MatrixXd::Identity(4, 4), 100) == 4);
  // threshold 4 log(400) / 400
  CHECK(4.0 * std::log(400.0) / 400.0 == doctest::Approx(0.0599).epsilon(1e-3));

  VectorXd v(5);
  v << 1, 2, 0.5, -1, 1;
  const MatrixXd rank1 = 10.0 * v * v.transpose();
  CHECK(select_pc_count(rank1, 50) == 1);
  CHECK_THROWS_AS(select_pc_count(MatrixXd::Zero(3, 3), 10), Error);
}

TEST_CASE("enumerated criterion minimizer equals the eigenvalue threshold count") {
  Gen gen(3);
  for (int trial = 0; trial < 300; ++trial) {
    const int d = gen.integer(1, 20);
    const int n = gen.integer(2, 500);
    const MatrixXd omega = gen.psd(d, gen.integer(1, d));
    CHECK(select_pc_count(omega, n) == pc_threshold_count(omega, n));
  }
}

TEST_CASE("well-conditioned weight keeps the identity") {
  Gen gen(4);
  const MatrixXd s = gen.normal_matrix(200, 5);
  const MatrixXd w = s.transpose() * s / 200.0;
  MomentSplit split;
  split.primary = {0, 1, 2};
  split.secondary = {3, 4};
  const GroupReduction red = reduce_group(w, split, 200);
  CHECK_FALSE(red.primary_reduced);
  CHECK_FALSE(red.secondary_reduced);
  CHECK((red.u1 - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((red.u2 - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("duplicated moments are reduced to an invertible weight") {
  Gen gen(5);
  MatrixXd s = gen.normal_matrix(100, 6);
  s.col(2) = s.col(0);
  s.col(5) = s.col(3) - s.col(4);
  const MatrixXd w = s.transpose() * s / 100.0;
  CHECK(reciprocal_condition(w) < 1e-12);
  MomentSplit split;
  split.primary = {0, 1, 2};
  split.secondary = {3, 4, 5};
  const GroupReduction red = reduce_group(w, split, 100);
  CHECK(red.primary_reduced);
  CHECK(red.secondary_reduced);
  const MatrixXd reduced = red.u * w * red.u.transpose();
  CHECK(reciprocal_condition(reduced) >= 1e-10);
  const OrthogonalityCheck oc = orthogonality_residual(s, red);
  CHECK(oc.max_abs <= 1e-10 * oc.scale);
}

TEST_CASE("orthogonalized secondary moments are uncorrelated with the primary ones") {
  for (std::uint64_t seed = 6; seed < 12; ++seed) {
    const Built b = five_groups(seed, 25);
    const MomentSystem sys(b.idx, b.views, b.data.response(), 5, true);
    Gen gen(seed);
    const VectorXd beta = gen.normal_vector(sys.num_parameters());
    const ReductionMap map = build_reduction(sys, beta);
    for (std::size_t r = 0; r < sys.groups().size(); ++r) {
      const GroupStack st = moment_vector(sys.groups()[r], beta);
      const OrthogonalityCheck oc = orthogonality_residual(st.samples, map.groups[r]);
      CHECK(oc.max_abs <= 1e-10 * oc.scale);
      const MatrixXd reduced = map.groups[r].u * weight_block(st.samples) * map.groups[r].u.transpose();
      CHECK(reciprocal_condition(reduced) >= 1e-10);
    }
  }
}

TEST_CASE("identity reduction reproduces the unreduced objective") {
  const Built b = five_groups(13, 60);
  const MomentSystem sys(b.idx, b.views, b.data.response());
  GmmOptions opts;
  opts.reduce = false;
  GmmObjective obj(sys, PenaltySpec{0.0, 3.7}, opts);
  Gen gen(14);
  for (int t = 0; t < 4; ++t) {
    const VectorXd beta = gen.normal_vector(6);
    obj.refresh(beta);
    CHECK(obj.loss(beta) == doctest::Approx(unreduced_loss(sys, beta)).epsilon(1e-10));
  }
}

TEST_CASE("global reduction is block diagonal") {
  const Built b = five_groups(15, 30);
  const MomentSystem sys(b.idx, b.views, b.data.response());
  const ReductionMap map = build_reduction(sys, VectorXd::Zero(6));
  const MatrixXd g = map.global();
  CHECK(g.rows() == map.rows());
  CHECK(g.cols() == sys.total_dim());
  int row = 0, col = 0;
  for (const auto& red : map.groups) {
    CHECK((g.block(row, col, red.rows(), red.u.cols()) - red.u).cwiseAbs().maxCoeff() == 0.0);
    row += red.rows();
    col += static_cast<int>(red.u.cols());
  }
}
