#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "fedc4/dense.hpp"
#include "fedc4/finite_diff.hpp"
#include "fedc4/gcn.hpp"
#include "fedc4/rng.hpp"
#include "fedc4/tape.hpp"

using namespace fedc4;

namespace {

// Finite-difference check of a scalar tape head against the tape's own
// gradient for one leaf. `build` maps a leaf id (fed with `x0`) to the head.
void check_op_grad(const DenseMatrix& x0,
                   const std::function<Tape::NodeId(Tape&, Tape::NodeId)>& build,
                   double tol = 1e-6) {
  auto value_at = [&](const std::vector<double>& flat) {
    Tape t;
    DenseMatrix x = x0;
    x.values = flat;
    return t.value(build(t, t.leaf(std::move(x)))).values[0];
  };
  auto grad_at = [&](const std::vector<double>& flat) {
    Tape t;
    DenseMatrix x = x0;
    x.values = flat;
    const Tape::NodeId leaf = t.leaf(std::move(x));
    const auto g = t.gradients(build(t, leaf), {leaf});
    REQUIRE(g[0] >= 0);
    return t.value(g[0]).values;
  };
  const auto rep = finite_diff_check(value_at, grad_at, x0.values, 1e-6, tol, 99);
  CHECK(rep.max_rel_err <= tol);
}

}  // namespace

TEST_CASE("per-op gradients agree with finite differences") {
  Rng rng(21);
  const DenseMatrix a = gaussian_matrix(3, 4, rng);
  const DenseMatrix sq = gaussian_matrix(4, 4, rng);
  const DenseMatrix b = gaussian_matrix(4, 2, rng);
  const DenseMatrix w = gaussian_matrix(3, 4, rng);

  SUBCASE("matmul") {
    check_op_grad(a, [&](Tape& t, Tape::NodeId x) {
      return t.sumdot(t.matmul(x, t.constant(b)), t.constant(DenseMatrix::ones(3, 2)));
    });
  }
  SUBCASE("transpose+hadamard") {
    check_op_grad(a, [&](Tape& t, Tape::NodeId x) {
      return t.sumdot(t.hadamard(t.transpose(x), t.constant(transpose(w))),
                      t.constant(DenseMatrix::ones(4, 3)));
    });
  }
  SUBCASE("relu") {
    check_op_grad(a, [&](Tape& t, Tape::NodeId x) {
      return t.sumdot(t.relu(x), t.constant(w));
    }, 1e-4);
  }
  SUBCASE("sigmoid") {
    check_op_grad(a, [&](Tape& t, Tape::NodeId x) {
      return t.sumdot(t.sigmoid(x), t.constant(w));
    });
  }
  SUBCASE("softmax_rows") {
    check_op_grad(a, [&](Tape& t, Tape::NodeId x) {
      return t.sumdot(t.softmax_rows(x), t.constant(w));
    });
  }
  SUBCASE("rsqrt") {
    DenseMatrix pos = a;
    for (double& v : pos.values) v = 1.0 + std::fabs(v);
    check_op_grad(pos, [&](Tape& t, Tape::NodeId x) {
      return t.sumdot(t.rsqrt(x), t.constant(w));
    });
  }
  SUBCASE("smul and sumsq") {
    check_op_grad(a, [&](Tape& t, Tape::NodeId x) {
      return t.sumsq(t.smul(x, t.sumdot(x, t.constant(w))));
    }, 1e-5);
  }
  SUBCASE("masked_ce") {
    check_op_grad(a, [&](Tape& t, Tape::NodeId x) {
      return t.masked_ce(x, {1, 0, 3}, {1, 0, 1});
    });
  }
  SUBCASE("pair ops") {
    check_op_grad(a, [&](Tape& t, Tape::NodeId x) {
      const auto p = t.pair_broadcast(x, t.relu(x));
      return t.sumdot(t.pair_reduce_j(p, 3), t.constant(w));
    }, 1e-4);
  }
  SUBCASE("pairs_to_sym round trip") {
    const DenseMatrix head = gaussian_matrix(4, 4, rng);
    check_op_grad(sq, [&](Tape& t, Tape::NodeId x) {
      const auto pairs = t.sym_to_pairs(x);
      const auto back = t.pairs_to_sym(pairs, 4);
      return t.sumdot(back, t.constant(head));
    });
  }
}

TEST_CASE("tape cross-checks the hand-written GCN backward") {
  Rng rng(5);
  const int n = 6, d = 4, h = 3, c = 3;
  DenseMatrix ahat(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      const double v = rng.uniform01() < 0.4 ? rng.uniform01() : 0.0;
      ahat.at(i, j) = ahat.at(j, i) = (i == j) ? 1.0 : v;
    }
  const DenseMatrix x = gaussian_matrix(n, d, rng);
  const GCNParams params = glorot_gcn(d, h, c, 11);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = int(rng.below(c));
  std::vector<std::uint8_t> mask(n, 1);
  mask[2] = 0;

  const ForwardTrace trace = gcn_forward(AHat(ahat), x, params);
  const GCNGrads hand = gcn_backward(AHat(ahat), x, params, labels, mask, trace, true);

  Tape t;
  const auto na = t.constant(ahat);
  const auto nx = t.leaf(x);
  const auto w1 = t.leaf(params.w1);
  const auto w2 = t.leaf(params.w2);
  const auto p1 = t.matmul(na, nx);
  const auto h1 = t.relu(t.matmul(p1, w1));
  const auto logits = t.matmul(t.matmul(na, h1), w2);
  const auto loss = t.masked_ce(logits, labels, mask);

  CHECK(t.value(loss).values[0] ==
        doctest::Approx(masked_cross_entropy(trace.logits, labels, mask)).epsilon(1e-12));

  const auto grads = t.gradients(loss, {w1, w2, nx});
  const DenseMatrix& gw1 = t.value(grads[0]);
  const DenseMatrix& gw2 = t.value(grads[1]);
  const DenseMatrix& gx = t.value(grads[2]);
  for (std::int64_t i = 0; i < gw1.size(); ++i)
    CHECK(gw1.values[i] == doctest::Approx(hand.w1.values[i]).epsilon(1e-10));
  for (std::int64_t i = 0; i < gw2.size(); ++i)
    CHECK(gw2.values[i] == doctest::Approx(hand.w2.values[i]).epsilon(1e-10));
  for (std::int64_t i = 0; i < gx.size(); ++i)
    CHECK(gx.values[i] == doctest::Approx(hand.x->values[i]).epsilon(1e-10));
}

TEST_CASE("gradient-of-gradient on a tiny closed form") {
  // L(w) = (x w)^2 summed; dL/dw = 2 x^T x w. With lmat = ||dL/dw - g0||^2,
  // d(lmat)/dw = 2 (2 x^T x) (2 x^T x w - g0) in 1-D.
  const double xv = 1.7, wv = -0.6, g0 = 0.9;
  Tape t;
  const auto x = t.constant(DenseMatrix(1, 1, xv));
  const auto w = t.leaf(DenseMatrix(1, 1, wv));
  const auto y = t.matmul(x, w);
  const auto loss = t.sumsq(y);
  const auto gw = t.gradients(loss, {w});
  REQUIRE(gw[0] >= 0);
  const double expected_first = 2.0 * xv * xv * wv;
  CHECK(t.value(gw[0]).values[0] == doctest::Approx(expected_first).epsilon(1e-12));

  const auto diff = t.sub(gw[0], t.constant(DenseMatrix(1, 1, g0)));
  const auto lmat = t.sumsq(diff);
  const auto g2 = t.gradients(lmat, {w});
  REQUIRE(g2[0] >= 0);
  const double expected_second = 2.0 * (expected_first - g0) * 2.0 * xv * xv;
  CHECK(t.value(g2[0]).values[0] == doctest::Approx(expected_second).epsilon(1e-12));
}
