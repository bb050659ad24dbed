#pragma once

#include <cstdint>
#include <vector>

#include "fedc4/graph.hpp"

namespace fedc4 {

struct Partition {
  std::vector<int> assignment;  // node -> client id in [0, num_clients)
  int num_clients = 0;
};

// Newman modularity of an assignment (unweighted edges).
double modularity(const Graph& g, const std::vector<int>& assignment);

// Two-phase Louvain modularity maximization, then adjusted to exactly k
// communities: greedy least-loss merges when Louvain finds more, seeded
// balanced cuts of the largest community when it finds fewer. Deterministic
// under (graph, k, seed).
Partition louvain_partition(const Graph& g, int k, std::uint64_t seed);

std::vector<std::vector<int>> partition_members(const Partition& p);

}  // namespace fedc4
