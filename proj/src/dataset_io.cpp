#include "fedc4/dataset_io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fedc4/log.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fedc4 {

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error(p.filename().string() + " not found");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double parse_real(std::string_view tok, const char* where) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw std::runtime_error(std::string("bad number in ") + where + ": '" + std::string(tok) +
                             "'");
  return v;
}

}  // namespace

Graph load_dataset(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root))
    throw std::runtime_error("dataset directory not found: " + dir);

  const json meta = json::parse(slurp(root / "meta.json"));
  Graph g;
  g.num_nodes = meta.at("num_nodes").get<int>();
  g.num_classes = meta.at("num_classes").get<int>();
  const int d = meta.at("feature_dim").get<int>();

  // labels.txt
  {
    std::istringstream in(slurp(root / "labels.txt"));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      g.labels.push_back(static_cast<int>(parse_real(line, "labels.txt")));
    }
    if (static_cast<int>(g.labels.size()) != g.num_nodes)
      throw std::runtime_error("labels.txt has " + std::to_string(g.labels.size()) +
                               " rows, meta says " + std::to_string(g.num_nodes));
  }

  // features.csv
  {
    const std::string text = slurp(root / "features.csv");
    g.features = DenseMatrix(g.num_nodes, d);
    std::size_t pos = 0;
    int row = 0;
    while (pos < text.size() && row < g.num_nodes) {
      std::size_t eol = text.find('\n', pos);
      if (eol == std::string::npos) eol = text.size();
      std::string_view line(text.data() + pos, eol - pos);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!line.empty()) {
        int col = 0;
        std::size_t p = 0;
        while (p <= line.size()) {
          std::size_t comma = line.find(',', p);
          if (comma == std::string_view::npos) comma = line.size();
          if (col >= d) throw std::runtime_error("features.csv row has too many columns");
          g.features.at(row, col++) = parse_real(line.substr(p, comma - p), "features.csv");
          p = comma + 1;
          if (comma == line.size()) break;
        }
        if (col != d)
          throw std::runtime_error("features.csv row " + std::to_string(row) + " has " +
                                   std::to_string(col) + " columns, expected " +
                                   std::to_string(d));
        ++row;
      }
      pos = eol + 1;
    }
    if (row != g.num_nodes)
      throw std::runtime_error("features.csv has " + std::to_string(row) + " rows, meta says " +
                               std::to_string(g.num_nodes));
  }

  // edges.tsv
  {
    std::istringstream in(slurp(root / "edges.tsv"));
    std::string line;
    std::vector<std::pair<int, int>> raw;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) throw std::runtime_error("edges.tsv: missing tab separator");
      raw.emplace_back(static_cast<int>(parse_real(line.substr(0, tab), "edges.tsv")),
                       static_cast<int>(parse_real(line.substr(tab + 1), "edges.tsv")));
    }
    std::int64_t dropped = 0;
    g.edges = canonical_edges(std::move(raw), g.num_nodes, &dropped);
    if (dropped > 0)
      log_info("load_dataset: dropped " + std::to_string(dropped) +
               " duplicate/self-loop edge entries");
  }

  // splits.json (optional)
  if (fs::exists(root / "splits.json")) {
    const json s = json::parse(slurp(root / "splits.json"));
    SplitMasks m;
    m.train.assign(g.num_nodes, 0);
    m.val.assign(g.num_nodes, 0);
    m.test.assign(g.num_nodes, 0);
    auto fill = [&](const char* key, std::vector<std::uint8_t>& mask) {
      for (int id : s.at(key).get<std::vector<int>>()) {
        if (id < 0 || id >= g.num_nodes)
          throw std::runtime_error("splits.json: node id out of range");
        mask[id] = 1;
      }
    };
    fill("train", m.train);
    fill("val", m.val);
    fill("test", m.test);
    g.splits = std::move(m);
  }

  g.validate();
  return g;
}

void write_dataset(const Graph& g, const std::string& dir) {
  const fs::path root(dir);
  fs::create_directories(root);

  {
    json meta{{"num_nodes", g.num_nodes},
              {"num_classes", g.num_classes},
              {"feature_dim", g.feature_dim()}};
    std::ofstream out(root / "meta.json", std::ios::binary);
    out << meta.dump(2) << "\n";
  }
  {
    std::ofstream out(root / "edges.tsv", std::ios::binary);
    for (auto [u, v] : g.edges) out << u << '\t' << v << '\n';
  }
  {
    std::ofstream out(root / "labels.txt", std::ios::binary);
    for (int y : g.labels) out << y << '\n';
  }
  {
    // %.17g keeps the write/load round trip exact.
    std::FILE* f = std::fopen((root / "features.csv").string().c_str(), "wb");
    if (!f) throw std::runtime_error("cannot write features.csv");
    for (int i = 0; i < g.num_nodes; ++i) {
      const double* row = g.features.row(i);
      for (int j = 0; j < g.feature_dim(); ++j)
        std::fprintf(f, "%s%.17g", j ? "," : "", row[j]);
      std::fputc('\n', f);
    }
    std::fclose(f);
  }
  if (g.splits) {
    json s{{"train", json::array()}, {"val", json::array()}, {"test", json::array()}};
    for (int i = 0; i < g.num_nodes; ++i) {
      if (g.splits->train[i]) s["train"].push_back(i);
      if (g.splits->val[i]) s["val"].push_back(i);
      if (g.splits->test[i]) s["test"].push_back(i);
    }
    std::ofstream out(root / "splits.json", std::ios::binary);
    out << s.dump() << "\n";
  }
}

}  // namespace fedc4
