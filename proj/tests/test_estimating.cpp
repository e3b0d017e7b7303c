#include "mbi/estimating.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace mbi;
using mbi::testing::Gen;

namespace {

struct Instance {
  DataSet data;
  PatternIndex idx;
  ImputationSet views;
  VectorXd beta;
};

// Five-group layout, two columns per source. With `latent` every column is a
// fixed combination of a 2-dimensional factor, so each source determines the
// others exactly.
Instance make_instance(std::uint64_t seed, bool latent, double noise, int per_group = 30) {
  Gen gen(seed);
  const int n = 5 * per_group, p = 6;
  MatrixXd load = latent ? Gen(99).normal_matrix(p, 2) : MatrixXd(Gen(99).normal_matrix(p, p) * 0.5);
  if (!latent) load += MatrixXd::Identity(p, p);
  const MatrixXd sigma = load * load.transpose();
  const MatrixXd x = gen.normal_matrix(n, load.cols()) * load.transpose();
  VectorXd beta(p);
  beta << 1.0, 0.0, -2.0, 0.0, 0.5, 0.0;
  const VectorXd y = x * beta + noise * gen.normal_vector(n);
  DataSet d = mbi::testing::block_dataset(x, y, {2, 2, 2}, mbi::testing::five_group_layouts(),
                                          std::vector<int>(5, per_group));
  PatternIndex idx = detect_patterns(d);
  ImputationSet views = build_views(d, idx, mbi::testing::gaussian_models(idx, sigma));
  return {std::move(d), std::move(idx), std::move(views), beta};
}

}  // namespace

TEST_CASE("noiseless complete data has zero moments at the truth") {
  Gen gen(1);
  const MatrixXd x = gen.normal_matrix(20, 3);
  const VectorXd beta = (VectorXd(3) << 1.0, -1.0, 0.5).finished();
  const DataSet d(x, Mask::Constant(20, 3, true), x * beta, {{0, 3}});
  const PatternIndex idx = detect_patterns(d);
  const MomentSystem sys(idx, impute(d, idx), d.response());
  const GroupStack st = moment_vector(sys.groups()[0], beta);
  CHECK(st.mean.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("moment length adds up over donors") {
  const Instance inst = make_instance(2, false, 1.0);
  const MomentSystem sys(inst.idx, inst.views, inst.data.response());
  const GroupMoments& g2 = sys.groups()[1];
  CHECK(g2.donors == IndexList{0, 2, 3});
  CHECK(g2.dim() == 6 + 4 + 4);
  const MomentSystem with_const(inst.idx, inst.views, inst.data.response(), 5, true);
  CHECK(with_const.groups()[1].dim() == 7 + 5 + 5);
  CHECK(with_const.num_parameters() == 7);
}

TEST_CASE("hand arithmetic on one covariate and two samples") {
  // z = x = (1, 3), y = (2, 5): g_i = x_i (y_i - x_i b).
  MatrixXd x(2, 1);
  x << 1.0, 3.0;
  const VectorXd y = (VectorXd(2) << 2.0, 5.0).finished();
  const DataSet d(x, Mask::Constant(2, 1, true), y, {{0, 1}});
  const PatternIndex idx = detect_patterns(d);
  const MomentSystem sys(idx, impute(d, idx), y, 1);
  const VectorXd b = (VectorXd(1) << 0.5).finished();
  const GroupStack st = moment_vector(sys.groups()[0], b);
  // g_1 = 1 * (2 - 0.5) = 1.5, g_2 = 3 * (5 - 1.5) = 10.5
  CHECK(st.samples(0, 0) == doctest::Approx(1.5));
  CHECK(st.samples(1, 0) == doctest::Approx(10.5));
  CHECK(st.mean(0) == doctest::Approx(6.0));
  CHECK(weight_block(st.samples)(0, 0) == doctest::Approx((1.5 * 1.5 + 10.5 * 10.5) / 2.0));
}

TEST_CASE("weight block") {
  Gen gen(3);
  SUBCASE("one sample is a rank-one outer product") {
    const MatrixXd s = gen.normal_matrix(1, 4);
    const MatrixXd w = weight_block(s);
    CHECK((w - s.transpose() * s).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("duplicated samples change nothing") {
    const MatrixXd s = gen.normal_matrix(1, 3);
    MatrixXd dup(4, 3);
    dup << s, s, s, s;
    CHECK((weight_block(dup) - weight_block(s)).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("matches direct summation") {
    const MatrixXd s = gen.normal_matrix(3, 5);
    MatrixXd direct = MatrixXd::Zero(5, 5);
    for (int i = 0; i < 3; ++i)
      for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b) direct(a, b) += s(i, a) * s(i, b) / 3.0;
    CHECK((weight_block(s) - direct).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("moments are affine in beta") {
  const Instance inst = make_instance(4, false, 1.0);
  const MomentSystem sys(inst.idx, inst.views, inst.data.response(), 5, true);
  Gen gen(5);
  for (int trial = 0; trial < 5; ++trial) {
    const VectorXd b1 = gen.normal_vector(7), b2 = gen.normal_vector(7);
    for (const auto& g : sys.groups()) {
      const VectorXd diff = moment_vector(g, b1).mean - moment_vector(g, b2).mean;
      const VectorXd lin = moment_jacobian(g) * (b1 - b2);
      CHECK((diff - lin).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, diff.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("cross-group weight blocks are zero") {
  const Instance inst = make_instance(6, false, 1.0);
  const MomentSystem sys(inst.idx, inst.views, inst.data.response());
  const EstimatingSystem es = evaluate_system(sys, inst.beta);
  const MatrixXd w = es.weight();
  REQUIRE(w.rows() == es.total_dim);
  for (std::size_t r = 0; r < es.weights.size(); ++r) {
    const int begin = es.group_offsets[r];
    const int end = begin + static_cast<int>(es.weights[r].rows());
    for (int i = begin; i < end; ++i)
      for (int j = 0; j < w.cols(); ++j)
        if (j < begin || j >= end) CHECK(w(i, j) == 0.0);
  }
}

TEST_CASE("exact conditional expectations give zero moments without noise") {
  const Instance inst = make_instance(7, true, 0.0);
  const MomentSystem sys(inst.idx, inst.views, inst.data.response());
  const EstimatingSystem es = evaluate_system(sys, inst.beta);
  CHECK(es.g.cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("moments are centered at the truth over replications") {
  // Gaussian covariates, exact conditional means, noisy response.
  const int reps = 200;
  std::vector<VectorXd> draws;
  for (int rep = 0; rep < reps; ++rep) {
    const Instance inst = make_instance(1000 + rep, false, 1.0, 20);
    const MomentSystem sys(inst.idx, inst.views, inst.data.response());
    draws.push_back(evaluate_system(sys, inst.beta).g);
  }
  const Index d = draws.front().size();
  VectorXd mean = VectorXd::Zero(d), sq = VectorXd::Zero(d);
  for (const auto& g : draws) {
    mean += g / reps;
    sq += g.cwiseProduct(g) / reps;
  }
  int outside = 0;
  for (Index j = 0; j < d; ++j) {
    const double se = std::sqrt((sq(j) - mean(j) * mean(j)) * reps / (reps - 1.0) / reps);
    if (std::abs(mean(j)) > 3.0 * se) ++outside;
  }
  CHECK(outside == 0);
}
