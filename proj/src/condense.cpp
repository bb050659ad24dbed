#include "fedc4/condense.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fedc4/log.hpp"
#include "fedc4/rng.hpp"
#include "fedc4/tape.hpp"

namespace fedc4 {

std::vector<int> synthetic_class_counts(const Graph& g, double ratio) {
  if (ratio <= 0.0) throw std::invalid_argument("synthetic_class_counts: ratio must be > 0");
  std::vector<int> hist(g.num_classes, 0);
  for (int y : g.labels) ++hist[y];
  std::vector<int> counts(g.num_classes, 0);
  for (int c = 0; c < g.num_classes; ++c) {
    if (hist[c] == 0) continue;
    counts[c] = std::max(1, static_cast<int>(std::llround(ratio * hist[c])));
  }
  return counts;
}

std::pair<CondensedGraph, MLPParams> init_condensed_counts(const Graph& g,
                                                           const std::vector<int>& class_counts,
                                                           std::uint64_t seed, int mlp_hidden) {
  if (static_cast<int>(class_counts.size()) != g.num_classes)
    throw std::invalid_argument("init_condensed_counts: counts length != num_classes");
  int m = 0;
  for (int c : class_counts) m += c;
  if (m <= 0) throw std::invalid_argument("init_condensed_counts: no synthetic nodes");

  CondensedGraph s;
  s.y_syn.reserve(m);
  for (int c = 0; c < g.num_classes; ++c)
    for (int i = 0; i < class_counts[c]; ++i) s.y_syn.push_back(c);
  Rng xrng(derive_seed(seed, 0xc0de1u));
  s.x_syn = gaussian_matrix(m, g.feature_dim(), xrng);

  MLPParams phi =
      glorot_mlp({2 * g.feature_dim(), mlp_hidden, 1}, derive_seed(seed, 0xc0de2u));
  return {std::move(s), std::move(phi)};
}

std::pair<CondensedGraph, MLPParams> init_condensed(const Graph& g, double ratio,
                                                    std::uint64_t seed, int mlp_hidden) {
  return init_condensed_counts(g, synthetic_class_counts(g, ratio), seed, mlp_hidden);
}

DenseMatrix synth_adjacency(const DenseMatrix& x_syn, const MLPParams& phi) {
  const int n = x_syn.rows, d = x_syn.cols;
  if (phi.weights.size() != 2 || phi.weights[0].rows != 2 * d)
    throw std::invalid_argument("synth_adjacency: phi shape does not chain with features");
  const int h = phi.weights[0].cols;

  // First layer splits over the pair: mlp([x_i;x_j]) pre-activation is
  // x_i Wa + x_j Wb + b1 with Wa the top d rows of W1.
  DenseMatrix wa(d, h), wb(d, h);
  for (int r = 0; r < d; ++r) {
    std::copy(phi.weights[0].row(r), phi.weights[0].row(r) + h, wa.row(r));
    std::copy(phi.weights[0].row(r + d), phi.weights[0].row(r + d) + h, wb.row(r));
  }
  const DenseMatrix u = matmul(x_syn, wa);
  const DenseMatrix v = matmul(x_syn, wb);

  DenseMatrix scores(n, n);  // scores_ij = mlp([x_i;x_j])
  const DenseMatrix& w2 = phi.weights[1];
  const double b2 = phi.biases[1].values[0];
  std::vector<double> hidden(h);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double* ui = u.row(i);
      const double* vj = v.row(j);
      const double* b1 = phi.biases[0].row(0);
      double out = b2;
      for (int k = 0; k < h; ++k) {
        const double z = ui[k] + vj[k] + b1[k];
        if (z > 0.0) out += z * w2.at(k, 0);
      }
      scores.at(i, j) = out;
    }
  }

  DenseMatrix a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double pre = 0.5 * (scores.at(i, j) + scores.at(j, i));
      a.at(i, j) = 1.0 / (1.0 + std::exp(-pre));
    }
  }
  return a;
}

DenseMatrix sparsify(const DenseMatrix& a, double delta) {
  DenseMatrix out = a;
  for (double& v : out.values)
    if (!(v > delta)) v = 0.0;
  return out;
}

namespace {

std::vector<std::uint8_t> all_ones(int n) { return std::vector<std::uint8_t>(n, 1); }

// Deterministic Adam over a flat coordinate vector. Gradient matching is
// nearly flat in raw coordinates, so plain descent stalls; per-coordinate
// scaling is the standard fix here.
struct AdamState {
  std::vector<double> m, v;
  int t = 0;
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  void step(std::vector<double>& x, const std::vector<double>& g, double lr) {
    if (m.empty()) {
      m.assign(x.size(), 0.0);
      v.assign(x.size(), 0.0);
    }
    ++t;
    const double c1 = 1.0 - std::pow(kBeta1, t);
    const double c2 = 1.0 - std::pow(kBeta2, t);
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
      x[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
    }
  }
};

const std::vector<std::uint8_t>& train_mask_of(const Graph& g) {
  if (!g.splits) throw std::invalid_argument("condense: graph has no train mask");
  return g.splits->train;
}

// theta gradients of the original-graph train loss (no tape needed; theta is
// the only variable).
GCNGrads original_side_grads(const NormalizedAdjacency& ahat, const Graph& g,
                             const GCNParams& theta) {
  const AHat a(ahat);
  const ForwardTrace t = gcn_forward(a, g.features, theta);
  return gcn_backward(a, g.features, theta, g.labels, train_mask_of(g), t);
}

struct MatchTape {
  Tape tape;
  Tape::NodeId x = -1;  // leaf or const
  std::vector<Tape::NodeId> phi_leaves;
  Tape::NodeId lmat = -1;
};

// Builds the condensed-side matching loss as tape nodes. When
// phi_adjacency is false, `fixed_adj` supplies a constant a_syn instead of
// the synthesizer output.
MatchTape build_match_tape(const DenseMatrix& x_syn, const MLPParams& phi,
                           const std::vector<const GCNParams*>& thetas,
                           const std::vector<const GCNGrads*>& g_grads,
                           const std::vector<int>& y_syn, bool track_x, bool track_phi,
                           bool phi_adjacency, const DenseMatrix* fixed_adj) {
  const int n = x_syn.rows;
  const int d = x_syn.cols;
  MatchTape mt;
  Tape& t = mt.tape;

  mt.x = track_x ? t.leaf(x_syn) : t.constant(x_syn);

  Tape::NodeId ahat;
  if (phi_adjacency) {
    const int h = phi.weights[0].cols;
    DenseMatrix wa(d, h), wb(d, h);
    for (int r = 0; r < d; ++r) {
      std::copy(phi.weights[0].row(r), phi.weights[0].row(r) + h, wa.row(r));
      std::copy(phi.weights[0].row(r + d), phi.weights[0].row(r + d) + h, wb.row(r));
    }
    auto param = [&](DenseMatrix m) {
      const Tape::NodeId id = track_phi ? t.leaf(std::move(m)) : t.constant(std::move(m));
      if (track_phi) mt.phi_leaves.push_back(id);
      return id;
    };
    // Leaf order must match MLPParams::flatten: W1 (as Wa then Wb), b1, W2, b2.
    const Tape::NodeId nwa = param(std::move(wa));
    const Tape::NodeId nwb = param(std::move(wb));
    const Tape::NodeId nb1 = param(phi.biases[0]);
    const Tape::NodeId nw2 = param(phi.weights[1]);
    const Tape::NodeId nb2 = param(phi.biases[1]);

    const Tape::NodeId ones_n1 = t.constant(DenseMatrix::ones(n, 1));
    const Tape::NodeId u =
        t.add(t.matmul(mt.x, nwa), t.matmul(ones_n1, nb1));  // bias folded into U
    const Tape::NodeId v = t.matmul(mt.x, nwb);
    const Tape::NodeId pre = t.relu(t.pair_broadcast(u, v));           // n^2 x h
    const Tape::NodeId ones_p1 = t.constant(DenseMatrix::ones(n * n, 1));
    const Tape::NodeId score =
        t.add(t.matmul(pre, nw2), t.matmul(ones_p1, nb2));             // n^2 x 1
    const Tape::NodeId sym = t.pairs_to_sym(score, n);                 // n x n, diag 0
    DenseMatrix offdiag = DenseMatrix::ones(n, n);
    for (int i = 0; i < n; ++i) offdiag.at(i, i) = 0.0;
    const Tape::NodeId aprime = t.hadamard_const(t.sigmoid(sym), std::move(offdiag));
    // Weighted self-loop normalization, all on tape.
    const Tape::NodeId b = t.add_const(aprime, DenseMatrix::identity(n));
    const Tape::NodeId deg = t.matmul(b, t.constant(DenseMatrix::ones(n, 1)));
    const Tape::NodeId dinv = t.rsqrt(deg);
    ahat = t.hadamard(b, t.matmul(dinv, t.transpose(dinv)));
  } else {
    ahat = t.constant(normalize_weighted(*fixed_adj));
  }

  Tape::NodeId total = -1;
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    const Tape::NodeId w1 = t.leaf(thetas[k]->w1);
    const Tape::NodeId w2 = t.leaf(thetas[k]->w2);
    const Tape::NodeId p1 = t.matmul(ahat, mt.x);
    const Tape::NodeId h1 = t.relu(t.matmul(p1, w1));
    const Tape::NodeId p2 = t.matmul(ahat, h1);
    const Tape::NodeId logits = t.matmul(p2, w2);
    const Tape::NodeId ls = t.masked_ce(logits, y_syn, all_ones(n));

    const auto grads = t.gradients(ls, {w1, w2});
    const Tape::NodeId d1 = t.sub(grads[0], t.constant(g_grads[k]->w1));
    const Tape::NodeId d2 = t.sub(grads[1], t.constant(g_grads[k]->w2));
    const Tape::NodeId lk = t.add(t.sumsq(d1), t.sumsq(d2));
    total = total < 0 ? lk : t.add(total, lk);
  }
  mt.lmat = thetas.size() > 1
                ? t.scale(total, 1.0 / static_cast<double>(thetas.size()))
                : total;
  return mt;
}

}  // namespace

double gradient_matching_loss(const GCNParams& theta, const Graph& g, const CondensedGraph& s) {
  if (s.a_syn.rows != s.size() || s.a_syn.cols != s.size())
    throw std::invalid_argument("gradient_matching_loss: a_syn undefined or mis-shaped");
  if (g.feature_dim() != s.x_syn.cols || theta.w1.rows != g.feature_dim())
    throw std::invalid_argument("gradient_matching_loss: feature dims do not chain");

  const NormalizedAdjacency ahat_g = normalize_adjacency(g);
  const GCNGrads gg = original_side_grads(ahat_g, g, theta);

  const DenseMatrix ahat_s = normalize_weighted(s.a_syn);
  const AHat a(ahat_s);
  const ForwardTrace t = gcn_forward(a, s.x_syn, theta);
  const GCNGrads gs = gcn_backward(a, s.x_syn, theta, s.y_syn, all_ones(s.size()), t);

  return frobenius_sq(sub(gg.w1, gs.w1)) + frobenius_sq(sub(gg.w2, gs.w2));
}

MatchGrads match_loss_grads(const GCNParams& theta, const Graph& g, const DenseMatrix& x_syn,
                            const MLPParams& phi, const std::vector<int>& y_syn) {
  const NormalizedAdjacency ahat_g = normalize_adjacency(g);
  const GCNGrads gg = original_side_grads(ahat_g, g, theta);
  MatchTape mt = build_match_tape(x_syn, phi, {&theta}, {&gg}, y_syn, true, true, true, nullptr);

  MatchGrads out;
  out.loss = mt.tape.value(mt.lmat).values[0];
  std::vector<Tape::NodeId> wrt{mt.x};
  wrt.insert(wrt.end(), mt.phi_leaves.begin(), mt.phi_leaves.end());
  const auto grads = mt.tape.gradients(mt.lmat, wrt);
  out.d_x = grads[0] >= 0 ? mt.tape.value(grads[0]) : DenseMatrix(x_syn.rows, x_syn.cols);

  // Re-pack (Wa, Wb, b1, W2, b2) gradients into MLPParams::flatten order.
  const int d = x_syn.cols, h = phi.weights[0].cols;
  MLPParams gphi = phi;
  for (auto& w : gphi.weights) w = DenseMatrix(w.rows, w.cols);
  for (auto& b : gphi.biases) b = DenseMatrix(b.rows, b.cols);
  auto fetch = [&](std::size_t idx) -> DenseMatrix {
    const Tape::NodeId gid = grads[idx + 1];
    return gid >= 0 ? mt.tape.value(gid) : DenseMatrix();
  };
  const DenseMatrix gwa = fetch(0), gwb = fetch(1), gb1 = fetch(2), gw2 = fetch(3),
                    gb2 = fetch(4);
  for (int r = 0; r < d; ++r) {
    if (gwa.rows)
      std::copy(gwa.row(r), gwa.row(r) + h, gphi.weights[0].row(r));
    if (gwb.rows)
      std::copy(gwb.row(r), gwb.row(r) + h, gphi.weights[0].row(r + d));
  }
  if (gb1.rows) gphi.biases[0] = gb1;
  if (gw2.rows) gphi.weights[1] = gw2;
  if (gb2.rows) gphi.biases[1] = gb2;
  out.d_phi = gphi.flatten();
  return out;
}

MatchGrads match_loss_grads_fixed_adj(const GCNParams& theta, const Graph& g,
                                      const CondensedGraph& s) {
  const NormalizedAdjacency ahat_g = normalize_adjacency(g);
  const GCNGrads gg = original_side_grads(ahat_g, g, theta);
  MLPParams unused;
  MatchTape mt =
      build_match_tape(s.x_syn, unused, {&theta}, {&gg}, s.y_syn, true, false, false, &s.a_syn);
  MatchGrads out;
  out.loss = mt.tape.value(mt.lmat).values[0];
  const auto grads = mt.tape.gradients(mt.lmat, {mt.x});
  out.d_x = grads[0] >= 0 ? mt.tape.value(grads[0]) : DenseMatrix(s.x_syn.rows, s.x_syn.cols);
  return out;
}

CondensedGraph condense_with_counts(const Graph& g, const std::vector<int>& class_counts,
                                    const CondenseConfig& cfg, std::uint64_t seed,
                                    CondenseStats* stats) {
  auto [s, phi] = init_condensed_counts(g, class_counts, seed, cfg.mlp_hidden);
  const NormalizedAdjacency ahat_g = normalize_adjacency(g);
  const std::vector<std::uint8_t>& tmask = train_mask_of(g);
  (void)tmask;  // validated up front

  CondenseStats local;
  CondenseStats& st = stats ? *stats : local;
  st.epoch_mean_loss.clear();

  AdamState adam_phi, adam_feat;

  for (int epoch = 0; epoch < cfg.outer_epochs; ++epoch) {
    // Fresh theta draws for this epoch; their original-side gradients are
    // fixed while x_syn and phi move.
    std::vector<GCNParams> thetas;
    std::vector<GCNGrads> ggrads;
    for (int k = 0; k < cfg.theta_samples; ++k) {
      thetas.push_back(glorot_gcn(g.feature_dim(), cfg.gcn_hidden, g.num_classes,
                                  derive_seed(seed, 0x73e7au, epoch, k)));
      ggrads.push_back(original_side_grads(ahat_g, g, thetas.back()));
    }
    std::vector<const GCNParams*> tptr;
    std::vector<const GCNGrads*> gptr;
    for (int k = 0; k < cfg.theta_samples; ++k) {
      tptr.push_back(&thetas[k]);
      gptr.push_back(&ggrads[k]);
    }

    double loss_sum = 0.0;
    int loss_count = 0;
    auto record = [&](double loss) {
      if (!std::isfinite(loss))
        throw std::runtime_error("condense: non-finite matching loss at epoch " +
                                 std::to_string(epoch));
      loss_sum += loss;
      ++loss_count;
    };

    for (int step = 0; step < cfg.alt_steps_adj; ++step) {
      MatchTape mt =
          build_match_tape(s.x_syn, phi, tptr, gptr, s.y_syn, false, true, true, nullptr);
      record(mt.tape.value(mt.lmat).values[0]);
      const auto grads = mt.tape.gradients(mt.lmat, mt.phi_leaves);
      // Leaves are (Wa, Wb, b1, W2, b2); repack into the flat phi layout.
      const int d = g.feature_dim(), h = cfg.mlp_hidden;
      MLPParams gphi = phi;
      for (auto& w : gphi.weights) w = DenseMatrix(w.rows, w.cols);
      for (auto& b : gphi.biases) b = DenseMatrix(b.rows, b.cols);
      auto fill = [&](DenseMatrix& target, int grad_idx, int row_offset) {
        if (grads[grad_idx] < 0) return;
        const DenseMatrix& gm = mt.tape.value(grads[grad_idx]);
        for (int r = 0; r < gm.rows; ++r)
          for (int c = 0; c < gm.cols; ++c) target.at(r + row_offset, c) = gm.at(r, c);
      };
      fill(gphi.weights[0], 0, 0);
      fill(gphi.weights[0], 1, d);
      fill(gphi.biases[0], 2, 0);
      fill(gphi.weights[1], 3, 0);
      fill(gphi.biases[1], 4, 0);
      (void)h;
      std::vector<double> flat = phi.flatten();
      adam_phi.step(flat, gphi.flatten(), cfg.lr_adj);
      phi.unflatten(flat);
    }

    for (int step = 0; step < cfg.alt_steps_feat; ++step) {
      MatchTape mt =
          build_match_tape(s.x_syn, phi, tptr, gptr, s.y_syn, true, false, true, nullptr);
      record(mt.tape.value(mt.lmat).values[0]);
      const auto grads = mt.tape.gradients(mt.lmat, {mt.x});
      if (grads[0] >= 0) adam_feat.step(s.x_syn.values, mt.tape.value(grads[0]).values,
                                        cfg.lr_feat);
    }

    st.epoch_mean_loss.push_back(loss_count ? loss_sum / loss_count : 0.0);
    log_debug("condense epoch " + std::to_string(epoch) + " mean l_mat " +
              std::to_string(st.epoch_mean_loss.back()));
  }

  if (!st.epoch_mean_loss.empty()) {
    st.first_epoch_mean = st.epoch_mean_loss.front();
    st.last_epoch_mean = st.epoch_mean_loss.back();
  }

  s.a_syn = sparsify(synth_adjacency(s.x_syn, phi), cfg.delta_sparsify);
  return std::move(s);
}

CondensedGraph condense(const Graph& g, const CondenseConfig& cfg, std::uint64_t seed,
                        CondenseStats* stats) {
  return condense_with_counts(g, synthetic_class_counts(g, cfg.ratio), cfg, seed, stats);
}

GCNParams train_on_condensed(const CondensedGraph& s, int epochs, const SGDConfig& cfg,
                             std::uint64_t seed, int hidden, int num_classes) {
  if (num_classes <= 0)
    num_classes = 1 + *std::max_element(s.y_syn.begin(), s.y_syn.end());
  GCNParams theta = glorot_gcn(s.x_syn.cols, hidden, num_classes, derive_seed(seed, 0x7c0deu));
  const DenseMatrix ahat = normalize_weighted(s.a_syn);
  train_gcn(theta, AHat(ahat), s.x_syn, s.y_syn, all_ones(s.size()), epochs, cfg);
  return theta;
}

Graph condensed_to_graph(const CondensedGraph& s) {
  Graph g;
  g.num_nodes = s.size();
  g.num_classes = s.y_syn.empty() ? 0 : 1 + *std::max_element(s.y_syn.begin(), s.y_syn.end());
  g.features = s.x_syn;
  g.labels = s.y_syn;
  for (int i = 0; i < s.size(); ++i)
    for (int j = i + 1; j < s.size(); ++j)
      if (s.a_syn.at(i, j) > 0.0) g.edges.emplace_back(i, j);
  return g;
}

}  // namespace fedc4
