#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "fedc4/dense.hpp"

namespace fedc4 {

struct SplitMasks {
  std::vector<std::uint8_t> train;
  std::vector<std::uint8_t> val;
  std::vector<std::uint8_t> test;
};

// Undirected simple graph with node features and labels. Edges are stored
// once with u < v, sorted and deduplicated; no self loops.
struct Graph {
  int num_nodes = 0;
  int num_classes = 0;
  std::vector<std::pair<int, int>> edges;
  DenseMatrix features;  // num_nodes x d
  std::vector<int> labels;
  std::optional<SplitMasks> splits;

  int feature_dim() const { return features.cols; }
  std::int64_t num_edges() const { return static_cast<std::int64_t>(edges.size()); }
  void validate() const;  // throws on any broken invariant
};

// CSR over both edge directions; weights default to 1.
struct SparseAdjacency {
  int n = 0;
  std::vector<int> row_ptr;
  std::vector<int> col_idx;
  std::vector<double> weights;

  // out = A * x  (row-major dense x)
  DenseMatrix multiply(const DenseMatrix& x) const;
};

// Symmetrically normalized adjacency with self loops:
// D^{-1/2} (A + I) D^{-1/2}, D the degree matrix of A + I.
struct NormalizedAdjacency {
  SparseAdjacency mat;
};

// Sorts, dedupes, symmetrizes and strips self loops; returns the edge list
// in canonical (u < v) order. `dropped` (if non-null) receives the number of
// discarded duplicate/self-loop entries.
std::vector<std::pair<int, int>> canonical_edges(std::vector<std::pair<int, int>> raw,
                                                 int num_nodes, std::int64_t* dropped = nullptr);

std::vector<std::vector<int>> adjacency_lists(const Graph& g);
std::vector<int> degrees(const Graph& g);

NormalizedAdjacency normalize_adjacency(const Graph& g);

// Weighted counterpart used for condensed graphs: normalizes (W + I) with
// weighted degrees. W must be square, symmetric, entries >= 0.
DenseMatrix normalize_weighted(const DenseMatrix& w);

// Induced subgraph on `nodes` (relabeled contiguously, in the order given
// after sorting ascending). Throws on an empty node set.
Graph induced_subgraph(const Graph& g, const std::vector<int>& nodes);

// --- topology metrics ---

double graph_density(const Graph& g);
double edge_homophily(const Graph& g);
// KL(P_a || P_b) between degree histograms over the union of observed degree
// values, each bin add-smoothed before normalization.
double degree_kl(const Graph& a, const Graph& b, double smoothing = 1e-6);

// Seeded disjoint train/val/test masks with the given fractions.
SplitMasks make_random_splits(int num_nodes, double train_frac, double val_frac,
                              std::uint64_t seed);

}  // namespace fedc4
