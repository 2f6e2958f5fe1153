#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "agcn/error.hpp"
#include "agcn/gcn.hpp"
#include "agcn/graph.hpp"
#include "agcn/ops.hpp"
#include "test_util.hpp"

using namespace agcn;
using agcn::testing::check_op;
using agcn::testing::max_abs_diff;
using agcn::testing::random_tensor;

namespace {

Eigen::MatrixXd to_eigen(const Tensor& t) {
  const auto k = static_cast<Eigen::Index>(t.dim(0));
  Eigen::MatrixXd m(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) m(i, j) = t[static_cast<std::size_t>(i * k + j)];
  return m;
}

Tensor random_adjacency(std::size_t k, Rng& rng) {
  SubgraphLayout layout = build_subgraphs(k);
  std::vector<GridPos> pos(k);
  for (auto& p : pos) p = {rng.below(28), rng.below(28)};
  return build_adjacency(pos, layout).weights;
}

}  // namespace

TEST(Laplacian, HandCaseAndRowSums) {
  Tensor a({2, 2}, std::vector<double>{0, 2, 2, 0});
  EXPECT_EQ(laplacian(a).vec(), (std::vector<double>{2, -2, -2, 2}));
  const Tensor empty = laplacian(Tensor::zeros({5, 5}));
  for (double v : empty.data()) EXPECT_EQ(v, 0.0);

  Rng rng(1);
  Tensor r = random_adjacency(12, rng);
  Tensor l = laplacian(r);
  for (std::size_t i = 0; i < 12; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 12; ++j) s += l.at({i, j});
    EXPECT_EQ(s, 0.0);
  }
}

TEST(Laplacian, RejectsAsymmetry) {
  Tensor a({2, 2}, std::vector<double>{0, 2, 1, 0});
  EXPECT_THROW(laplacian(a), DataError);
  EXPECT_THROW(propagation_matrix(a), DataError);
}

TEST(Laplacian, PositiveSemidefinite) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 4 * (1 + rng.below(6));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(laplacian(random_adjacency(k, rng))));
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9);
  }
}

TEST(Propagation, HandCaseAndEmptyGraph) {
  Tensor a({2, 2}, std::vector<double>{0, 2, 2, 0});
  PropagationMatrix p = propagation_matrix(a);
  const std::vector<double> want{1.0 / 3, 2.0 / 3, 2.0 / 3, 1.0 / 3};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(p.l_norm[i], want[i], 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(p.l_norm));
  EXPECT_NEAR(es.eigenvalues()(0), -1.0 / 3, 1e-12);
  EXPECT_NEAR(es.eigenvalues()(1), 1.0, 1e-12);

  PropagationMatrix eye = propagation_matrix(Tensor::zeros({4, 4}));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(eye.l_norm.at({i, j}), i == j ? 1.0 : 0.0);
}

TEST(Propagation, SymmetricWithBoundedSpectrum) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = std::vector<std::size_t>{8, 20, 24}[trial % 3];
    PropagationMatrix p = propagation_matrix(random_adjacency(k, rng));
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) EXPECT_NEAR(p.l_norm.at({i, j}), p.l_norm.at({j, i}), 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(p.l_norm));
    EXPECT_LE(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0 + 1e-9);
  }
}

TEST(GcnLayer, DoubleIdentity) {
  Rng rng(4);
  Tensor x = random_tensor({2, 4, 3}, rng, 0.0, 1.0);
  Tensor theta({3, 3});
  for (std::size_t i = 0; i < 3; ++i) theta.at({i, i}) = 1.0;
  PropagationMatrix eye = propagation_matrix(Tensor::zeros({4, 4}));
  EXPECT_EQ(gcn_layer(x, eye, theta), x);
}

TEST(GcnLayer, ConstantNodesStayConstant) {
  // A row-stochastic propagation matrix maps node-constant features to
  // node-constant features; no relu so the pre-activation is visible.
  Rng rng(5);
  Tensor prop = random_tensor({6, 6}, rng, 0.0, 1.0);
  for (std::size_t i = 0; i < 6; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 6; ++j) s += prop.at({i, j});
    for (std::size_t j = 0; j < 6; ++j) prop.at({i, j}) /= s;
  }
  Tensor x({1, 6, 3});
  for (std::size_t k = 0; k < 6; ++k)
    for (std::size_t c = 0; c < 3; ++c) x.at({0, k, c}) = static_cast<double>(c) - 1.0;
  Tensor theta = random_tensor({2, 3}, rng);
  Tape tape;
  Var y = ops::node_linear(ops::graph_propagate(tape.constant(x), {prop}), tape.constant(theta));
  for (std::size_t k = 1; k < 6; ++k)
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(y.value().at({0, k, c}), y.value().at({0, 0, c}), 1e-12);
}

TEST(GcnLayer, MatchesTripleLoop) {
  Rng rng(6);
  Tensor x = random_tensor({2, 5, 4}, rng);
  Tensor theta = random_tensor({3, 4}, rng);
  Tensor a5 = Tensor::zeros({5, 5});
  a5.at({0, 1}) = a5.at({1, 0}) = 3.0;
  a5.at({2, 4}) = a5.at({4, 2}) = 1.0;
  PropagationMatrix p = propagation_matrix(a5);
  Tensor y = gcn_layer(x, p, theta);
  Tensor want({2, 5, 3});
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t o = 0; o < 3; ++o) {
        double s = 0.0;
        for (std::size_t j = 0; j < 5; ++j)
          for (std::size_t c = 0; c < 4; ++c) s += p.l_norm.at({i, j}) * x.at({b, j, c}) * theta.at({o, c});
        want.at({b, i, o}) = std::max(s, 0.0);
      }
  EXPECT_LT(max_abs_diff(y, want), 1e-12);
  EXPECT_THROW(gcn_layer(x, p, Tensor::zeros({3, 5})), ConfigError);
}

TEST(GcnLayer, GradientCheck) {
  Rng rng(7);
  Tensor a5 = Tensor::zeros({5, 5});
  a5.at({0, 3}) = a5.at({3, 0}) = 2.0;
  a5.at({1, 2}) = a5.at({2, 1}) = 1.0;
  std::vector<PropagationMatrix> props{propagation_matrix(a5), propagation_matrix(Tensor::zeros({5, 5}))};
  auto report = check_op({random_tensor({2, 5, 3}, rng), random_tensor({4, 3}, rng)}, [&](Tape&, std::vector<Var>& v) {
    std::vector<Tensor> mats{props[0].l_norm, props[1].l_norm};
    return ops::relu(ops::node_linear(ops::graph_propagate(v[0], mats), v[1]));
  });
  EXPECT_LT(report.max_rel_error, 1e-5) << report.worst_param;
}

TEST(GraphConvolutionModule, MatchesReferenceLayer) {
  ParamRegistry reg;
  GraphConvolution gcn("gcn.sag", 4, 3, 1, reg, 9);
  ASSERT_TRUE(reg.contains("gcn.sag.theta"));
  Rng rng(8);
  Tensor x = random_tensor({2, 8, 4}, rng);
  std::vector<PropagationMatrix> props{propagation_matrix(random_adjacency(8, rng)),
                                       propagation_matrix(random_adjacency(8, rng))};
  Tape tape;
  Var y = gcn.forward(tape, tape.constant(x), props);
  for (std::size_t b = 0; b < 2; ++b) {
    Tensor xb({1, 8, 4});
    std::copy(x.data().begin() + static_cast<long>(b * 32), x.data().begin() + static_cast<long>((b + 1) * 32),
              xb.data().begin());
    Tensor ref = gcn_layer(xb, props[b], reg.at("gcn.sag.theta").value);
    for (std::size_t i = 0; i < 24; ++i) EXPECT_NEAR(y.value()[b * 24 + i], ref[i], 1e-12);
  }

  ParamRegistry deep;
  GraphConvolution two("gcn.cag", 4, 3, 2, deep, 9);
  EXPECT_TRUE(deep.contains("gcn.cag.theta1"));
  EXPECT_EQ(deep.at("gcn.cag.theta1").value.shape(), (Shape{3, 3}));
}

TEST(Readout, WidthZerosAndBatchOrder) {
  Tensor ys({1, 20, 256}), yc({1, 20, 256});
  Tensor r = graph_readout(ys, yc);
  EXPECT_EQ(r.shape(), (Shape{1, 2u * 20u * 256u}));
  for (double v : r.data()) EXPECT_EQ(v, 0.0);

  Rng rng(10);
  Tensor a = random_tensor({2, 3, 2}, rng), b = random_tensor({2, 3, 2}, rng);
  Tensor out = graph_readout(a, b);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(out.at({0, i}), a[i]);
    EXPECT_EQ(out.at({0, 6 + i}), b[i]);
    EXPECT_EQ(out.at({1, i}), a[6 + i]);
  }
  Tensor sa({2, 3, 2}), sb({2, 3, 2});
  for (std::size_t i = 0; i < 6; ++i) {
    sa[i] = a[6 + i];
    sa[6 + i] = a[i];
    sb[i] = b[6 + i];
    sb[6 + i] = b[i];
  }
  Tensor swapped = graph_readout(sa, sb);
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(swapped.at({0, i}), out.at({1, i}));
    EXPECT_EQ(swapped.at({1, i}), out.at({0, i}));
  }
}
