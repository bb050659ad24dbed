#include "fedc4/louvain.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <stdexcept>

#include "fedc4/rng.hpp"

namespace fedc4 {

namespace {

// Weighted undirected multigraph for the aggregation phase. Self loops are
// stored once in `loops`; degree counts them twice.
struct WGraph {
  std::vector<std::vector<std::pair<int, double>>> adj;  // (nbr, w), nbr != self
  std::vector<double> loops;
  std::vector<double> degree;
  double total_weight = 0.0;  // m: sum of edge weights, loops once

  int size() const { return static_cast<int>(adj.size()); }
};

WGraph from_graph(const Graph& g) {
  WGraph w;
  w.adj.resize(g.num_nodes);
  w.loops.assign(g.num_nodes, 0.0);
  w.degree.assign(g.num_nodes, 0.0);
  for (auto [u, v] : g.edges) {
    w.adj[u].emplace_back(v, 1.0);
    w.adj[v].emplace_back(u, 1.0);
    w.degree[u] += 1.0;
    w.degree[v] += 1.0;
    w.total_weight += 1.0;
  }
  return w;
}

// One pass of local moving; returns true if any node changed community.
bool local_moving(const WGraph& g, std::vector<int>& community, Rng& rng) {
  const int n = g.size();
  const double m = g.total_weight;
  std::vector<double> tot(n, 0.0);
  for (int v = 0; v < n; ++v) tot[community[v]] += g.degree[v];

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  bool any_move = false;
  bool improved = true;
  while (improved) {
    improved = false;
    for (int v : order) {
      const int home = community[v];
      std::map<int, double> links;  // community -> weight from v
      links[home];                  // consider staying even without links
      for (auto [u, w] : g.adj[v]) links[community[u]] += w;

      tot[home] -= g.degree[v];
      double best_gain = links[home] / m - g.degree[v] * tot[home] / (2.0 * m * m);
      int best = home;
      for (auto [c, w] : links) {
        if (c == home) continue;
        const double gain = w / m - g.degree[v] * tot[c] / (2.0 * m * m);
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best = c;
        }
      }
      tot[best] += g.degree[v];
      if (best != home) {
        community[v] = best;
        improved = true;
        any_move = true;
      }
    }
  }
  return any_move;
}

// Relabels communities to a dense 0..K-1 range, in order of first appearance
// by node id.
int compact(std::vector<int>& community) {
  std::map<int, int> remap;
  int next = 0;
  for (int& c : community) {
    auto it = remap.find(c);
    if (it == remap.end()) it = remap.emplace(c, next++).first;
    c = it->second;
  }
  return next;
}

WGraph aggregate(const WGraph& g, const std::vector<int>& community, int k) {
  WGraph out;
  out.adj.resize(k);
  out.loops.assign(k, 0.0);
  out.degree.assign(k, 0.0);
  out.total_weight = g.total_weight;
  std::vector<std::map<int, double>> acc(k);
  for (int v = 0; v < g.size(); ++v) {
    const int cv = community[v];
    out.loops[cv] += g.loops[v];
    for (auto [u, w] : g.adj[v]) {
      const int cu = community[u];
      if (cu == cv) {
        out.loops[cv] += w * 0.5;  // each intra edge visited from both ends
      } else {
        acc[cv][cu] += w;
      }
    }
  }
  for (int c = 0; c < k; ++c) {
    for (auto [u, w] : acc[c]) out.adj[c].emplace_back(u, w);
    out.degree[c] = 2.0 * out.loops[c];
    for (auto [u, w] : out.adj[c]) out.degree[c] += w;
  }
  return out;
}

// Greedy merge of the community pair whose merge least decreases modularity.
void merge_step(const Graph& g, std::vector<int>& assignment, int k) {
  const double m = static_cast<double>(g.edges.size());
  std::vector<double> deg_c(k, 0.0);
  {
    auto deg = degrees(g);
    for (int v = 0; v < g.num_nodes; ++v) deg_c[assignment[v]] += deg[v];
  }
  std::map<std::pair<int, int>, double> between;
  for (auto [u, v] : g.edges) {
    int a = assignment[u], b = assignment[v];
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    between[{a, b}] += 1.0;
  }
  double best_gain = -1e300;
  std::pair<int, int> best = {0, 1};
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      auto it = between.find({a, b});
      const double w_ab = it == between.end() ? 0.0 : it->second;
      const double gain = w_ab / m - deg_c[a] * deg_c[b] / (2.0 * m * m);
      if (gain > best_gain + 1e-15) {
        best_gain = gain;
        best = {a, b};
      }
    }
  }
  for (int& c : assignment) {
    if (c == best.second) c = best.first;
  }
}

// Splits the largest community in two with a seeded BFS-ordered cut.
void split_step(const Graph& g, std::vector<int>& assignment, int k, Rng& rng) {
  std::vector<std::vector<int>> members(k);
  for (int v = 0; v < g.num_nodes; ++v) members[assignment[v]].push_back(v);
  int big = 0;
  for (int c = 1; c < k; ++c)
    if (members[c].size() > members[big].size()) big = c;
  const auto& nodes = members[big];
  if (nodes.size() < 2) throw std::runtime_error("louvain_partition: cannot split further");

  auto adj = adjacency_lists(g);
  std::vector<std::uint8_t> inside(g.num_nodes, 0), visited(g.num_nodes, 0);
  for (int v : nodes) inside[v] = 1;

  std::vector<int> order;
  order.reserve(nodes.size());
  std::deque<int> queue;
  const int start = nodes[rng.below(nodes.size())];
  queue.push_back(start);
  visited[start] = 1;
  std::size_t scan = 0;
  while (order.size() < nodes.size()) {
    if (queue.empty()) {
      while (scan < nodes.size() && visited[nodes[scan]]) ++scan;
      queue.push_back(nodes[scan]);
      visited[nodes[scan]] = 1;
    }
    const int v = queue.front();
    queue.pop_front();
    order.push_back(v);
    for (int u : adj[v]) {
      if (inside[u] && !visited[u]) {
        visited[u] = 1;
        queue.push_back(u);
      }
    }
  }
  const std::size_t keep = (order.size() + 1) / 2;
  for (std::size_t i = keep; i < order.size(); ++i) assignment[order[i]] = k;
}

}  // namespace

double modularity(const Graph& g, const std::vector<int>& assignment) {
  const double m = static_cast<double>(g.edges.size());
  if (m == 0.0) return 0.0;
  std::map<int, double> intra, deg_c;
  auto deg = degrees(g);
  for (int v = 0; v < g.num_nodes; ++v) deg_c[assignment[v]] += deg[v];
  for (auto [u, v] : g.edges)
    if (assignment[u] == assignment[v]) intra[assignment[u]] += 1.0;
  double q = 0.0;
  for (auto [c, d] : deg_c) {
    const double l = intra.count(c) ? intra[c] : 0.0;
    q += l / m - (d / (2.0 * m)) * (d / (2.0 * m));
  }
  return q;
}

Partition louvain_partition(const Graph& g, int k, std::uint64_t seed) {
  if (g.num_nodes == 0) throw std::invalid_argument("louvain_partition: empty graph");
  if (k < 1 || k > g.num_nodes)
    throw std::invalid_argument("louvain_partition: k out of range");

  Rng rng(derive_seed(seed, 0x10f41u));
  std::vector<int> assignment(g.num_nodes);

  if (g.edges.empty()) {
    // No modularity signal; deterministic balanced chunks over shuffled nodes.
    std::vector<int> order(g.num_nodes);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    for (int i = 0; i < g.num_nodes; ++i)
      assignment[order[i]] = static_cast<int>((static_cast<std::int64_t>(i) * k) / g.num_nodes);
  } else {
    WGraph level = from_graph(g);
    std::iota(assignment.begin(), assignment.end(), 0);
    std::vector<int> node_to_level(assignment);  // node -> current level vertex

    while (true) {
      std::vector<int> community(level.size());
      std::iota(community.begin(), community.end(), 0);
      const bool moved = local_moving(level, community, rng);
      const int next_k = compact(community);
      if (!moved || next_k == level.size()) break;
      for (int v = 0; v < g.num_nodes; ++v) node_to_level[v] = community[node_to_level[v]];
      level = aggregate(level, community, next_k);
    }
    assignment = node_to_level;
  }

  int cur = compact(assignment);
  while (cur > k) {
    merge_step(g, assignment, cur);
    cur = compact(assignment);
  }
  while (cur < k) {
    split_step(g, assignment, cur, rng);
    cur = compact(assignment);
  }
  return Partition{std::move(assignment), k};
}

std::vector<std::vector<int>> partition_members(const Partition& p) {
  std::vector<std::vector<int>> members(p.num_clients);
  for (std::size_t v = 0; v < p.assignment.size(); ++v)
    members[p.assignment[v]].push_back(static_cast<int>(v));
  return members;
}

}  // namespace fedc4
