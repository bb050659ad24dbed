#pragma once

#include <string>

#include "fedc4/graph.hpp"

namespace fedc4 {

// Dataset directory format (text, UTF-8, LF):
//   meta.json     {"num_nodes": int, "num_classes": int, "feature_dim": int}
//   edges.tsv     one "u<TAB>v" per line, 0-indexed
//   features.csv  N rows of d comma-separated reals
//   labels.txt    N lines, one integer per line
//   splits.json   optional {"train":[ids],"val":[ids],"test":[ids]}
Graph load_dataset(const std::string& dir);
void write_dataset(const Graph& g, const std::string& dir);

}  // namespace fedc4
