#pragma once

#include <cstdint>
#include <vector>

#include "fedc4/graph.hpp"

namespace fedc4 {

// Stochastic block model; block i carries class label i % num_classes.
// Features are the class mean plus unit Gaussian noise, with class means
// pairwise separated.
Graph sbm_generate(const std::vector<int>& block_sizes, double p_in, double p_out, int d,
                   int num_classes, std::uint64_t seed);

// Citation-style benchmark stand-in with the classic small-corpus statistics:
// 2708 nodes, exactly 5429 undirected edges, 1433 binary bag-of-words
// features, 7 classes, ~0.81 edge homophily, 60/20/20 splits.
Graph generate_citation_corpus(std::uint64_t seed);

}  // namespace fedc4
