#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fedc4/condense.hpp"
#include "fedc4/finite_diff.hpp"
#include "fedc4/rng.hpp"
#include "fedc4/synth.hpp"

using namespace fedc4;

namespace {

Graph tiny_graph(std::uint64_t seed, int n = 8, int d = 4, int c = 2) {
  Graph g = sbm_generate({n / 2, n - n / 2}, 0.6, 0.2, d, c, seed);
  g.splits = make_random_splits(n, 0.6, 0.2, seed);
  // Guarantee a non-empty train mask.
  bool any = false;
  for (auto b : g.splits->train) any = any || b;
  if (!any) g.splits->train[0] = 1;
  return g;
}

}  // namespace

TEST_CASE("synthetic_class_counts follows the rounding rule") {
  SUBCASE("ratio 1.0 reproduces the class histogram") {
    Graph g = tiny_graph(3, 12, 3, 3);
    std::vector<int> hist(g.num_classes, 0);
    for (int y : g.labels) ++hist[y];
    CHECK(synthetic_class_counts(g, 1.0) == hist);
  }
  SUBCASE("small ratios keep every present class") {
    Graph g = tiny_graph(4, 40, 3, 4);
    const auto counts = synthetic_class_counts(g, 0.02);
    std::vector<int> hist(g.num_classes, 0);
    for (int y : g.labels) ++hist[y];
    for (int c = 0; c < g.num_classes; ++c) {
      if (hist[c] > 0) CHECK(counts[c] >= 1);
      CHECK(counts[c] == (hist[c] ? std::max(1, int(std::llround(0.02 * hist[c]))) : 0));
    }
  }
  SUBCASE("ratio <= 0 throws") {
    Graph g = tiny_graph(5);
    CHECK_THROWS_AS(synthetic_class_counts(g, 0.0), std::invalid_argument);
  }
}

TEST_CASE("init_condensed determinism and shapes") {
  Graph g = tiny_graph(6, 10, 5, 2);
  auto [s1, phi1] = init_condensed(g, 0.5, 17);
  auto [s2, phi2] = init_condensed(g, 0.5, 17);
  CHECK(s1.x_syn == s2.x_syn);
  CHECK(s1.y_syn == s2.y_syn);
  CHECK(phi1.flatten() == phi2.flatten());
  CHECK(s1.x_syn.cols == g.feature_dim());
  CHECK(s1.a_syn.rows == 0);  // undefined until synthesis
}

TEST_CASE("synth_adjacency structural properties") {
  Graph g = tiny_graph(7, 6, 3, 2);
  auto [s, phi] = init_condensed(g, 0.5, 23);

  SUBCASE("all-zero phi gives 0.5 off-diagonal, 0 diagonal") {
    for (auto& w : phi.weights) w = DenseMatrix(w.rows, w.cols);
    for (auto& b : phi.biases) b = DenseMatrix(b.rows, b.cols);
    const DenseMatrix a = synth_adjacency(s.x_syn, phi);
    for (int i = 0; i < a.rows; ++i)
      for (int j = 0; j < a.cols; ++j)
        CHECK(a.at(i, j) == (i == j ? 0.0 : 0.5));
  }
  SUBCASE("symmetric with entries in (0,1) off-diagonal") {
    const DenseMatrix a = synth_adjacency(s.x_syn, phi);
    for (int i = 0; i < a.rows; ++i) {
      CHECK(a.at(i, i) == 0.0);
      for (int j = 0; j < a.cols; ++j) {
        CHECK(a.at(i, j) == a.at(j, i));
        if (i != j) {
          CHECK(a.at(i, j) > 0.0);
          CHECK(a.at(i, j) < 1.0);
        }
      }
    }
  }
}

TEST_CASE("sparsify examples") {
  DenseMatrix a(2, 2);
  a.at(0, 1) = a.at(1, 0) = 0.6;
  CHECK(sparsify(a, 0.5).at(0, 1) == 0.6);
  CHECK(sparsify(a, 0.7).at(0, 1) == 0.0);
  SUBCASE("delta 0 removes only non-positives") {
    DenseMatrix b(1, 3);
    b.at(0, 0) = 0.3;
    b.at(0, 1) = 0.0;
    b.at(0, 2) = 1e-9;
    const auto sp = sparsify(b, 0.0);
    CHECK(sp.at(0, 0) == 0.3);
    CHECK(sp.at(0, 1) == 0.0);
    CHECK(sp.at(0, 2) == 1e-9);
  }
  SUBCASE("idempotent") {
    Rng rng(9);
    DenseMatrix r(5, 5);
    for (auto& v : r.values) v = rng.uniform01();
    const auto once = sparsify(r, 0.4);
    CHECK(sparsify(once, 0.4) == once);
  }
}

TEST_CASE("gradient_matching_loss zero case and non-negativity") {
  // A graph that is its own condensed version: identical operands.
  Graph g = tiny_graph(11, 8, 3, 2);
  g.splits->train.assign(g.num_nodes, 1);  // condensed side uses all nodes
  CondensedGraph s;
  s.x_syn = g.features;
  s.y_syn = g.labels;
  s.a_syn = DenseMatrix(g.num_nodes, g.num_nodes);
  for (auto [u, v] : g.edges) s.a_syn.at(u, v) = s.a_syn.at(v, u) = 1.0;

  const GCNParams theta = glorot_gcn(g.feature_dim(), 4, g.num_classes, 5);
  CHECK(gradient_matching_loss(theta, g, s) == doctest::Approx(0.0).epsilon(1e-18));

  // Any other operand pair stays non-negative.
  Graph g2 = tiny_graph(12, 8, 3, 2);
  auto [s2, phi2] = init_condensed(g2, 0.5, 3);
  s2.a_syn = synth_adjacency(s2.x_syn, phi2);
  CHECK(gradient_matching_loss(theta, g2, s2) >= 0.0);
}

TEST_CASE("matching-loss gradients pass finite differences on 10 tiny instances") {
  int done = 0;
  for (std::uint64_t seed = 0; done < 10; ++seed) {
    Rng rng(seed * 7 + 3);
    const int n = 5 + int(rng.below(4));
    const int d = 2 + int(rng.below(3));
    Graph g = tiny_graph(seed + 100, n, d, 2);
    CondenseConfig cfg;
    cfg.mlp_hidden = 3;
    cfg.gcn_hidden = 3;
    auto [s, phi] = init_condensed(g, 0.5, seed + 1, cfg.mlp_hidden);
    const GCNParams theta = glorot_gcn(d, cfg.gcn_hidden, g.num_classes, seed + 9);

    SUBCASE("") {}  // keep doctest happy about shared setup

    // d(l_mat)/d(x_syn) through both the feature and adjacency paths.
    {
      auto f = [&](const std::vector<double>& flat) {
        DenseMatrix x = s.x_syn;
        x.values = flat;
        return match_loss_grads(theta, g, x, phi, s.y_syn).loss;
      };
      auto grad = [&](const std::vector<double>& flat) {
        DenseMatrix x = s.x_syn;
        x.values = flat;
        return match_loss_grads(theta, g, x, phi, s.y_syn).d_x.values;
      };
      const auto rep = finite_diff_check(f, grad, s.x_syn.values, 1e-5, 1e-3, seed + 41);
      INFO("x_syn grad, seed ", seed);
      CHECK(rep.max_rel_err <= 1e-3);
    }

    // d(l_mat)/d(phi).
    {
      auto f = [&](const std::vector<double>& flat) {
        MLPParams p = phi;
        p.unflatten(flat);
        return match_loss_grads(theta, g, s.x_syn, p, s.y_syn).loss;
      };
      auto grad = [&](const std::vector<double>& flat) {
        MLPParams p = phi;
        p.unflatten(flat);
        return match_loss_grads(theta, g, s.x_syn, p, s.y_syn).d_phi;
      };
      const auto rep = finite_diff_check(f, grad, phi.flatten(), 1e-5, 1e-3, seed + 77);
      INFO("phi grad, seed ", seed);
      CHECK(rep.max_rel_err <= 1e-3);
    }

    // Fixed-adjacency variant (the public loss) w.r.t. x_syn.
    {
      CondensedGraph sf = s;
      sf.a_syn = sparsify(synth_adjacency(s.x_syn, phi), 0.3);
      auto f = [&](const std::vector<double>& flat) {
        CondensedGraph sx = sf;
        sx.x_syn.values = flat;
        return gradient_matching_loss(theta, g, sx);
      };
      auto grad = [&](const std::vector<double>& flat) {
        CondensedGraph sx = sf;
        sx.x_syn.values = flat;
        return match_loss_grads_fixed_adj(theta, g, sx).d_x.values;
      };
      const auto rep = finite_diff_check(f, grad, sf.x_syn.values, 1e-5, 1e-3, seed + 99);
      INFO("fixed-adj grad, seed ", seed);
      CHECK(rep.max_rel_err <= 1e-3);
    }
    ++done;
  }
}

TEST_CASE("condense on a separable SBM yields a usable graph") {
  Graph g = sbm_generate({30, 30}, 0.2, 0.02, 6, 2, 42);
  g.splits = make_random_splits(60, 0.6, 0.2, 7);

  CondenseConfig cfg;
  cfg.ratio = 0.1;
  cfg.outer_epochs = 8;
  cfg.alt_steps_adj = 6;
  cfg.alt_steps_feat = 6;
  cfg.mlp_hidden = 16;
  cfg.gcn_hidden = 16;
  CondenseStats stats;
  const CondensedGraph s = condense(g, cfg, 1, &stats);

  SUBCASE("loss decreased in epoch mean") {
    CHECK(stats.last_epoch_mean <= stats.first_epoch_mean);
  }
  SUBCASE("a_syn structure") {
    CHECK(s.a_syn.rows == s.size());
    for (int i = 0; i < s.size(); ++i) {
      CHECK(s.a_syn.at(i, i) == 0.0);
      for (int j = 0; j < s.size(); ++j) {
        CHECK(s.a_syn.at(i, j) == s.a_syn.at(j, i));
        CHECK(s.a_syn.at(i, j) >= 0.0);
        if (s.a_syn.at(i, j) > 0.0) CHECK(s.a_syn.at(i, j) > cfg.delta_sparsify);
        CHECK(s.a_syn.at(i, j) <= 1.0);
      }
    }
  }
  SUBCASE("trained GCN beats 0.9 test accuracy on the separable SBM") {
    const GCNParams theta =
        train_on_condensed(s, 200, {0.3, 5e-4}, 3, cfg.gcn_hidden, g.num_classes);
    const NormalizedAdjacency ahat = normalize_adjacency(g);
    const auto trace = gcn_forward(AHat(ahat), g.features, theta);
    CHECK(accuracy(trace.logits, g.labels, g.splits->test) >= 0.9);
  }
  SUBCASE("deterministic under the same seed") {
    const CondensedGraph s2 = condense(g, cfg, 1);
    CHECK(s.x_syn == s2.x_syn);
    CHECK(s.a_syn == s2.a_syn);
    CHECK(s.y_syn == s2.y_syn);
  }
}

TEST_CASE("epoch-mean loss decreases across three seeds") {
  Graph g = sbm_generate({20, 20}, 0.25, 0.03, 5, 2, 11);
  g.splits = make_random_splits(40, 0.7, 0.1, 2);
  CondenseConfig cfg;
  cfg.ratio = 0.15;
  cfg.outer_epochs = 6;
  cfg.alt_steps_adj = 5;
  cfg.alt_steps_feat = 5;
  cfg.mlp_hidden = 8;
  cfg.gcn_hidden = 8;
  double first = 0.0, last = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    CondenseStats stats;
    condense(g, cfg, seed, &stats);
    first += stats.first_epoch_mean;
    last += stats.last_epoch_mean;
  }
  CHECK(last / 3.0 <= first / 3.0);
}

TEST_CASE("train_on_condensed basics") {
  SUBCASE("orthogonal one-per-class toy reaches training accuracy 1") {
    CondensedGraph s;
    s.x_syn = DenseMatrix::identity(3);
    s.y_syn = {0, 1, 2};
    s.a_syn = DenseMatrix(3, 3);  // isolated synthetic nodes
    const GCNParams theta = train_on_condensed(s, 300, {0.5, 0.0}, 4, 8);
    const DenseMatrix ahat = normalize_weighted(s.a_syn);
    const auto trace = gcn_forward(AHat(ahat), s.x_syn, theta);
    CHECK(accuracy(trace.logits, s.y_syn, {1, 1, 1}) == 1.0);
  }
  SUBCASE("zero epochs returns the seeded init") {
    CondensedGraph s;
    s.x_syn = DenseMatrix::identity(4);
    s.y_syn = {0, 1, 0, 1};
    s.a_syn = DenseMatrix(4, 4);
    const GCNParams a = train_on_condensed(s, 0, {0.1, 0.0}, 9, 6);
    const GCNParams b = glorot_gcn(4, 6, 2, derive_seed(9, 0x7c0deu));
    CHECK(a.w1 == b.w1);
    CHECK(a.w2 == b.w2);
  }
}

TEST_CASE("per-class counts never change during optimization") {
  Graph g = tiny_graph(21, 16, 4, 2);
  CondenseConfig cfg;
  cfg.ratio = 0.3;
  cfg.outer_epochs = 3;
  cfg.alt_steps_adj = 3;
  cfg.alt_steps_feat = 3;
  cfg.mlp_hidden = 6;
  cfg.gcn_hidden = 6;
  const auto counts_before = synthetic_class_counts(g, cfg.ratio);
  const CondensedGraph s = condense(g, cfg, 5);
  std::vector<int> counts_after(g.num_classes, 0);
  for (int y : s.y_syn) ++counts_after[y];
  CHECK(counts_after == counts_before);
}
