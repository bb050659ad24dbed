#include "fedc4/synth.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "fedc4/rng.hpp"

namespace fedc4 {

Graph sbm_generate(const std::vector<int>& block_sizes, double p_in, double p_out, int d,
                   int num_classes, std::uint64_t seed) {
  if (p_in < 0 || p_in > 1 || p_out < 0 || p_out > 1)
    throw std::invalid_argument("sbm_generate: probabilities must be in [0,1]");
  if (num_classes < 1) throw std::invalid_argument("sbm_generate: num_classes < 1");
  int n = 0;
  for (int b : block_sizes) {
    if (b <= 0) throw std::invalid_argument("sbm_generate: zero-size block");
    n += b;
  }

  Graph g;
  g.num_nodes = n;
  g.num_classes = num_classes;
  g.labels.resize(n);
  std::vector<int> block_of(n);
  {
    int v = 0;
    for (std::size_t b = 0; b < block_sizes.size(); ++b) {
      for (int i = 0; i < block_sizes[b]; ++i, ++v) {
        block_of[v] = static_cast<int>(b);
        g.labels[v] = static_cast<int>(b) % num_classes;
      }
    }
  }

  Rng erng(derive_seed(seed, 0xedf3u));
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      const double p = block_of[u] == block_of[v] ? p_in : p_out;
      if (erng.uniform01() < p) g.edges.emplace_back(u, v);
    }
  }

  // Class means: one-hot when they fit, otherwise random unit-scale draws.
  const double sep = 3.0;
  DenseMatrix means(num_classes, d);
  Rng mrng(derive_seed(seed, 0x3ea45u));
  if (num_classes <= d) {
    for (int c = 0; c < num_classes; ++c) means.at(c, c) = sep;
  } else {
    for (double& v : means.values) v = sep * mrng.normal();
  }
  Rng frng(derive_seed(seed, 0xfea7u));
  g.features = DenseMatrix(n, d);
  for (int v = 0; v < n; ++v) {
    const double* mu = means.row(g.labels[v]);
    double* row = g.features.row(v);
    for (int f = 0; f < d; ++f) row[f] = mu[f] + frng.normal();
  }
  return g;
}

Graph generate_citation_corpus(std::uint64_t seed) {
  constexpr int kNodes = 2708;
  constexpr int kEdges = 5429;
  constexpr int kDim = 1433;
  constexpr int kClasses = 7;
  // Class histogram of the classic corpus.
  const int class_sizes[kClasses] = {351, 217, 418, 818, 426, 298, 180};
  constexpr double kHomophily = 0.81;

  Graph g;
  g.num_nodes = kNodes;
  g.num_classes = kClasses;
  g.labels.resize(kNodes);
  std::vector<std::vector<int>> by_class(kClasses);
  {
    int v = 0;
    for (int c = 0; c < kClasses; ++c) {
      for (int i = 0; i < class_sizes[c]; ++i, ++v) {
        g.labels[v] = c;
        by_class[c].push_back(v);
      }
    }
  }

  // Bag-of-words features: each class prefers a 220-word window (adjacent
  // windows overlap, so classes are separable but not trivially so).
  Rng frng(derive_seed(seed, 0xf3a7u));
  g.features = DenseMatrix(kNodes, kDim);
  constexpr int kWindow = 220;
  constexpr int kStride = 180;
  constexpr double kOnRate = 0.065;
  constexpr double kBgRate = 0.004;
  for (int v = 0; v < kNodes; ++v) {
    const int base = g.labels[v] * kStride;
    double* row = g.features.row(v);
    for (int f = 0; f < kDim; ++f) {
      const bool preferred = ((f - base) % kDim + kDim) % kDim < kWindow;
      if (frng.uniform01() < (preferred ? kOnRate : kBgRate)) row[f] = 1.0;
    }
  }

  // Exactly kEdges edges, sampled with target homophily and mild
  // preferential attachment for a skewed degree profile.
  Rng erng(derive_seed(seed, 0xed6e5u));
  std::set<std::pair<int, int>> eset;
  std::vector<double> attach(kNodes, 1.0);
  auto pick_weighted = [&](const std::vector<int>& pool) {
    double total = 0.0;
    for (int v : pool) total += attach[v];
    double r = erng.uniform01() * total;
    for (int v : pool) {
      r -= attach[v];
      if (r <= 0.0) return v;
    }
    return pool.back();
  };
  std::vector<int> all(kNodes);
  for (int v = 0; v < kNodes; ++v) all[v] = v;
  while (static_cast<int>(eset.size()) < kEdges) {
    const int u = static_cast<int>(erng.below(kNodes));
    int v;
    if (erng.uniform01() < kHomophily) {
      v = pick_weighted(by_class[g.labels[u]]);
    } else {
      v = pick_weighted(all);
    }
    if (u == v) continue;
    const auto e = std::minmax(u, v);
    if (eset.emplace(e.first, e.second).second) {
      attach[u] += 1.0;
      attach[v] += 1.0;
    }
  }
  g.edges.assign(eset.begin(), eset.end());

  g.splits = make_random_splits(kNodes, 0.6, 0.2, derive_seed(seed, 0x59113u));
  return g;
}

}  // namespace fedc4
