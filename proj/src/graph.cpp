#include "fedc4/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "fedc4/rng.hpp"

namespace fedc4 {

void Graph::validate() const {
  if (static_cast<int>(labels.size()) != num_nodes)
    throw std::runtime_error("graph: labels length != num_nodes");
  if (features.rows != num_nodes)
    throw std::runtime_error("graph: feature matrix has " + std::to_string(features.rows) +
                             " rows, expected " + std::to_string(num_nodes));
  for (int y : labels) {
    if (y < 0 || y >= num_classes)
      throw std::runtime_error("graph: label " + std::to_string(y) + " out of range [0, " +
                               std::to_string(num_classes) + ")");
  }
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes || u >= v)
      throw std::runtime_error("graph: malformed edge");
  }
  if (splits) {
    const auto& s = *splits;
    if (static_cast<int>(s.train.size()) != num_nodes ||
        static_cast<int>(s.val.size()) != num_nodes ||
        static_cast<int>(s.test.size()) != num_nodes)
      throw std::runtime_error("graph: split mask length != num_nodes");
    for (int i = 0; i < num_nodes; ++i) {
      if (int(s.train[i]) + int(s.val[i]) + int(s.test[i]) > 1)
        throw std::runtime_error("graph: split masks overlap at node " + std::to_string(i));
    }
  }
}

std::vector<std::pair<int, int>> canonical_edges(std::vector<std::pair<int, int>> raw,
                                                 int num_nodes, std::int64_t* dropped) {
  std::int64_t before = static_cast<std::int64_t>(raw.size());
  std::vector<std::pair<int, int>> out;
  out.reserve(raw.size());
  for (auto [u, v] : raw) {
    if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes)
      throw std::runtime_error("edge endpoint out of range: (" + std::to_string(u) + ", " +
                               std::to_string(v) + ")");
    if (u == v) continue;  // self loop
    if (u > v) std::swap(u, v);
    out.emplace_back(u, v);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (dropped) *dropped = before - static_cast<std::int64_t>(out.size());
  return out;
}

std::vector<std::vector<int>> adjacency_lists(const Graph& g) {
  std::vector<std::vector<int>> adj(g.num_nodes);
  for (auto [u, v] : g.edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  for (auto& nbrs : adj) std::sort(nbrs.begin(), nbrs.end());
  return adj;
}

std::vector<int> degrees(const Graph& g) {
  std::vector<int> deg(g.num_nodes, 0);
  for (auto [u, v] : g.edges) {
    ++deg[u];
    ++deg[v];
  }
  return deg;
}

DenseMatrix SparseAdjacency::multiply(const DenseMatrix& x) const {
  if (x.rows != n) throw std::invalid_argument("SparseAdjacency::multiply: row mismatch");
  DenseMatrix out(n, x.cols);
  for (int i = 0; i < n; ++i) {
    double* dst = out.row(i);
    for (int e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
      const double w = weights[e];
      const double* src = x.row(col_idx[e]);
      for (int c = 0; c < x.cols; ++c) dst[c] += w * src[c];
    }
  }
  return out;
}

NormalizedAdjacency normalize_adjacency(const Graph& g) {
  const int n = g.num_nodes;
  std::vector<double> dtilde(n, 1.0);  // self loop
  for (auto [u, v] : g.edges) {
    dtilde[u] += 1.0;
    dtilde[v] += 1.0;
  }
  std::vector<double> dinv(n);
  for (int i = 0; i < n; ++i) dinv[i] = 1.0 / std::sqrt(dtilde[i]);

  // Build CSR over A + I.
  std::vector<int> count(n, 1);
  for (auto [u, v] : g.edges) {
    ++count[u];
    ++count[v];
  }
  SparseAdjacency a;
  a.n = n;
  a.row_ptr.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) a.row_ptr[i + 1] = a.row_ptr[i] + count[i];
  a.col_idx.resize(a.row_ptr[n]);
  a.weights.resize(a.row_ptr[n]);
  std::vector<int> cursor(a.row_ptr.begin(), a.row_ptr.end() - 1);
  auto put = [&](int r, int c) {
    a.col_idx[cursor[r]] = c;
    a.weights[cursor[r]] = dinv[r] * dinv[c];
    ++cursor[r];
  };
  for (int i = 0; i < n; ++i) put(i, i);
  for (auto [u, v] : g.edges) {
    put(u, v);
    put(v, u);
  }
  // Sort columns within each row for deterministic multiply order.
  for (int i = 0; i < n; ++i) {
    const int lo = a.row_ptr[i], hi = a.row_ptr[i + 1];
    std::vector<std::pair<int, double>> row(hi - lo);
    for (int e = lo; e < hi; ++e) row[e - lo] = {a.col_idx[e], a.weights[e]};
    std::sort(row.begin(), row.end());
    for (int e = lo; e < hi; ++e) {
      a.col_idx[e] = row[e - lo].first;
      a.weights[e] = row[e - lo].second;
    }
  }
  return {std::move(a)};
}

DenseMatrix normalize_weighted(const DenseMatrix& w) {
  if (w.rows != w.cols) throw std::invalid_argument("normalize_weighted: matrix not square");
  const int n = w.rows;
  std::vector<double> dinv(n);
  for (int i = 0; i < n; ++i) {
    double d = 1.0;  // self loop
    for (int j = 0; j < n; ++j) d += w.at(i, j);
    dinv[i] = 1.0 / std::sqrt(d);
  }
  DenseMatrix out(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double base = w.at(i, j) + (i == j ? 1.0 : 0.0);
      out.at(i, j) = base * dinv[i] * dinv[j];
    }
  }
  return out;
}

Graph induced_subgraph(const Graph& g, const std::vector<int>& nodes) {
  if (nodes.empty()) throw std::invalid_argument("induced_subgraph: empty node set");
  std::vector<int> sorted = nodes;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<int> relabel(g.num_nodes, -1);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const int v = sorted[i];
    if (v < 0 || v >= g.num_nodes) throw std::invalid_argument("induced_subgraph: bad node id");
    relabel[v] = static_cast<int>(i);
  }

  Graph out;
  out.num_nodes = static_cast<int>(sorted.size());
  out.num_classes = g.num_classes;
  out.features = DenseMatrix(out.num_nodes, g.feature_dim());
  out.labels.resize(out.num_nodes);
  for (int i = 0; i < out.num_nodes; ++i) {
    const int v = sorted[i];
    std::copy(g.features.row(v), g.features.row(v) + g.feature_dim(), out.features.row(i));
    out.labels[i] = g.labels[v];
  }
  for (auto [u, v] : g.edges) {
    if (relabel[u] >= 0 && relabel[v] >= 0) out.edges.emplace_back(relabel[u], relabel[v]);
  }
  if (g.splits) {
    SplitMasks s;
    s.train.resize(out.num_nodes);
    s.val.resize(out.num_nodes);
    s.test.resize(out.num_nodes);
    for (int i = 0; i < out.num_nodes; ++i) {
      const int v = sorted[i];
      s.train[i] = g.splits->train[v];
      s.val[i] = g.splits->val[v];
      s.test[i] = g.splits->test[v];
    }
    out.splits = std::move(s);
  }
  return out;
}

double graph_density(const Graph& g) {
  if (g.num_nodes < 2) throw std::invalid_argument("graph_density: need at least 2 nodes");
  const double n = g.num_nodes;
  return 2.0 * static_cast<double>(g.edges.size()) / (n * (n - 1.0));
}

double edge_homophily(const Graph& g) {
  if (g.edges.empty()) throw std::invalid_argument("edge_homophily: edgeless graph");
  std::int64_t same = 0;
  for (auto [u, v] : g.edges)
    if (g.labels[u] == g.labels[v]) ++same;
  return static_cast<double>(same) / static_cast<double>(g.edges.size());
}

double degree_kl(const Graph& a, const Graph& b, double smoothing) {
  if (smoothing <= 0.0) throw std::invalid_argument("degree_kl: smoothing must be > 0");
  std::map<int, double> ha, hb;
  for (int d : degrees(a)) ha[d] += 1.0;
  for (int d : degrees(b)) hb[d] += 1.0;
  std::map<int, std::pair<double, double>> joint;
  for (auto [d, c] : ha) joint[d].first = c;
  for (auto [d, c] : hb) joint[d].second = c;
  double za = 0.0, zb = 0.0;
  for (auto& [d, pq] : joint) {
    pq.first += smoothing;
    pq.second += smoothing;
    za += pq.first;
    zb += pq.second;
  }
  double kl = 0.0;
  for (auto& [d, pq] : joint) {
    const double p = pq.first / za, q = pq.second / zb;
    kl += p * std::log(p / q);
  }
  return kl;
}

SplitMasks make_random_splits(int num_nodes, double train_frac, double val_frac,
                              std::uint64_t seed) {
  std::vector<int> order(num_nodes);
  for (int i = 0; i < num_nodes; ++i) order[i] = i;
  Rng rng(derive_seed(seed, 0x59117u));
  rng.shuffle(order);
  const int n_train = static_cast<int>(std::llround(train_frac * num_nodes));
  const int n_val = static_cast<int>(std::llround(val_frac * num_nodes));
  SplitMasks s;
  s.train.assign(num_nodes, 0);
  s.val.assign(num_nodes, 0);
  s.test.assign(num_nodes, 0);
  for (int i = 0; i < num_nodes; ++i) {
    if (i < n_train)
      s.train[order[i]] = 1;
    else if (i < n_train + n_val)
      s.val[order[i]] = 1;
    else
      s.test[order[i]] = 1;
  }
  return s;
}

}  // namespace fedc4
