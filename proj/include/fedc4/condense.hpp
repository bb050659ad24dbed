#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fedc4/gcn.hpp"
#include "fedc4/graph.hpp"

namespace fedc4 {

// Small weighted synthetic graph distilled from a client graph.
struct CondensedGraph {
  DenseMatrix x_syn;        // n' x d
  DenseMatrix a_syn;        // n' x n', symmetric, zero diagonal, entries in [0,1]
  std::vector<int> y_syn;   // length n'

  int size() const { return x_syn.rows; }
};

struct CondenseConfig {
  double ratio = 0.08;
  double delta_sparsify = 0.5;
  int outer_epochs = 12;
  int theta_samples = 1;  // fresh GCN inits averaged per epoch
  double lr_feat = 0.01;
  double lr_adj = 0.01;
  int alt_steps_adj = 8;
  int alt_steps_feat = 8;
  int mlp_hidden = 64;
  int gcn_hidden = 64;
};

struct CondenseStats {
  std::vector<double> epoch_mean_loss;
  double first_epoch_mean = 0.0;
  double last_epoch_mean = 0.0;
};

// Per-class synthetic node counts: max(1, round(ratio * class_count)) for
// every class present in g.
std::vector<int> synthetic_class_counts(const Graph& g, double ratio);

// Gaussian x_syn, labels matching the class-count rule, Glorot phi. a_syn is
// left empty (generated by the synthesizer during optimization).
std::pair<CondensedGraph, MLPParams> init_condensed(const Graph& g, double ratio,
                                                    std::uint64_t seed, int mlp_hidden = 64);
std::pair<CondensedGraph, MLPParams> init_condensed_counts(const Graph& g,
                                                           const std::vector<int>& class_counts,
                                                           std::uint64_t seed,
                                                           int mlp_hidden = 64);

// A'_ij = sigmoid((mlp([x_i;x_j]) + mlp([x_j;x_i])) / 2) off-diagonal, 0 on
// the diagonal. phi's first layer acts on the concatenated pair.
DenseMatrix synth_adjacency(const DenseMatrix& x_syn, const MLPParams& phi);

// Entries kept iff strictly greater than delta.
DenseMatrix sparsify(const DenseMatrix& a, double delta);

// Squared distance between parameter gradients of the original-graph train
// loss and the condensed-graph loss at the same theta. The condensed side
// trains on all synthetic nodes over the weight-normalized a_syn.
double gradient_matching_loss(const GCNParams& theta, const Graph& g, const CondensedGraph& s);

// Matching loss plus its exact gradients w.r.t. x_syn and phi, with the
// condensed adjacency generated from (x_syn, phi). Exposed for the
// finite-difference gates.
struct MatchGrads {
  double loss = 0.0;
  DenseMatrix d_x;
  std::vector<double> d_phi;  // flattened like MLPParams::flatten
};
MatchGrads match_loss_grads(const GCNParams& theta, const Graph& g, const DenseMatrix& x_syn,
                            const MLPParams& phi, const std::vector<int>& y_syn);

// As above but with a fixed condensed adjacency (the public-loss variant);
// gradients flow only through the feature path.
MatchGrads match_loss_grads_fixed_adj(const GCNParams& theta, const Graph& g,
                                      const CondensedGraph& s);

// GCond-style alternating optimization; deterministic under (g, cfg, seed).
CondensedGraph condense(const Graph& g, const CondenseConfig& cfg, std::uint64_t seed,
                        CondenseStats* stats = nullptr);
CondensedGraph condense_with_counts(const Graph& g, const std::vector<int>& class_counts,
                                    const CondenseConfig& cfg, std::uint64_t seed,
                                    CondenseStats* stats = nullptr);

// GCN trained on the weight-normalized condensed graph with every synthetic
// node labeled. num_classes <= 0 infers the class count from y_syn.
GCNParams train_on_condensed(const CondensedGraph& s, int epochs, const SGDConfig& cfg,
                             std::uint64_t seed, int hidden = 64, int num_classes = 0);

// Simple-graph view for topology metrics: edges where a_syn > 0.
Graph condensed_to_graph(const CondensedGraph& s);

}  // namespace fedc4
