#include "mdagar/graph.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "mdagar/csv.hpp"

namespace mdagar {

namespace {

std::string with_line(const std::string& message, std::size_t line) {
  if (line == 0) return message;
  return "line " + std::to_string(line) + ": " + message;
}

}  // namespace

GraphError::GraphError(GraphErrorKind kind, const std::string& message, std::size_t line)
    : ValidationError(with_line(message, line)), kind_(kind), line_(line) {}

DirectedNeighborSets::DirectedNeighborSets(std::vector<std::size_t> offsets,
                                           std::vector<std::size_t> members)
    : offsets_(std::move(offsets)), members_(std::move(members)) {}

ArealGraph::ArealGraph(std::vector<std::string> labels, std::vector<Edge> edges)
    : labels_(std::move(labels)) {
  const std::size_t k = labels_.size();
  if (k == 0) throw GraphError(GraphErrorKind::kEmptyGraph, "graph has no regions");
  for (std::size_t j = 0; j < k; ++j) {
    if (!index_.emplace(labels_[j], j).second) {
      throw GraphError(GraphErrorKind::kDuplicateLabel,
                       "region label '" + labels_[j] + "' declared twice");
    }
  }
  edges_.reserve(edges.size());
  for (Edge e : edges) {
    if (e.first >= k || e.second >= k) {
      throw GraphError(GraphErrorKind::kIndexOutOfRange, "edge index out of range");
    }
    if (e.first == e.second) {
      throw GraphError(GraphErrorKind::kSelfLoop,
                       "self-loop on region '" + labels_[e.first] + "'");
    }
    if (e.first > e.second) std::swap(e.first, e.second);
    edges_.push_back(e);
  }
  std::sort(edges_.begin(), edges_.end());
  if (auto dup = std::adjacent_find(edges_.begin(), edges_.end()); dup != edges_.end()) {
    throw GraphError(GraphErrorKind::kDuplicateEdge, "duplicate edge " +
                                                         labels_[dup->first] + "," +
                                                         labels_[dup->second]);
  }

  std::vector<std::size_t> degree(k, 0);
  for (const Edge& e : edges_) {
    ++degree[e.first];
    ++degree[e.second];
  }
  offsets_.assign(k + 1, 0);
  for (std::size_t j = 0; j < k; ++j) offsets_[j + 1] = offsets_[j] + degree[j];
  adjacency_.resize(offsets_[k]);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (const Edge& e : edges_) {
    adjacency_[fill[e.first]++] = e.second;
    adjacency_[fill[e.second]++] = e.first;
  }
  for (std::size_t j = 0; j < k; ++j) {
    std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[j]),
              adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[j + 1]));
  }
  directed_ = directed_neighbor_sets(*this);
}

bool ArealGraph::adjacent(std::size_t a, std::size_t b) const {
  const auto n = neighbors(a);
  return std::binary_search(n.begin(), n.end(), b);
}

std::optional<std::size_t> ArealGraph::index_of(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t ArealGraph::num_components() const {
  std::vector<std::size_t> parent(size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = size();
  for (const Edge& e : edges_) {
    const auto a = find(e.first);
    const auto b = find(e.second);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components;
}

ArealGraph ArealGraph::permuted(std::span<const std::size_t> order) const {
  if (order.size() != size()) {
    throw ValidationError("permutation length does not match region count");
  }
  std::vector<std::size_t> position(size(), size());
  for (std::size_t p = 0; p < order.size(); ++p) {
    if (order[p] >= size() || position[order[p]] != size()) {
      throw ValidationError("invalid region permutation");
    }
    position[order[p]] = p;
  }
  return induced(order);
}

ArealGraph ArealGraph::induced(std::span<const std::size_t> keep) const {
  std::vector<std::size_t> position(size(), size());
  std::vector<std::string> labels;
  labels.reserve(keep.size());
  for (std::size_t p = 0; p < keep.size(); ++p) {
    if (keep[p] >= size() || position[keep[p]] != size()) {
      throw ValidationError("invalid region subset");
    }
    position[keep[p]] = p;
    labels.push_back(labels_[keep[p]]);
  }
  std::vector<Edge> edges;
  for (const Edge& e : edges_) {
    if (position[e.first] < size() && position[e.second] < size()) {
      edges.push_back({position[e.first], position[e.second]});
    }
  }
  return ArealGraph(std::move(labels), std::move(edges));
}

DirectedNeighborSets directed_neighbor_sets(const ArealGraph& g) {
  const std::size_t k = g.size();
  std::vector<std::size_t> offsets(k + 1, 0);
  std::vector<std::size_t> members;
  members.reserve(g.num_edges());
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t n : g.neighbors(j)) {
      if (n < j) members.push_back(n);  // neighbors are sorted
    }
    offsets[j + 1] = members.size();
  }
  return DirectedNeighborSets(std::move(offsets), std::move(members));
}

Eigen::SparseMatrix<double> adjacency_matrix(const ArealGraph& g) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * g.num_edges());
  for (const Edge& e : g.edges()) {
    triplets.emplace_back(static_cast<int>(e.first), static_cast<int>(e.second), 1.0);
    triplets.emplace_back(static_cast<int>(e.second), static_cast<int>(e.first), 1.0);
  }
  const auto k = static_cast<Eigen::Index>(g.size());
  Eigen::SparseMatrix<double> m(k, k);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

ArealGraph grid_graph(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) {
    throw GraphError(GraphErrorKind::kZeroDimension, "grid dimensions must be positive");
  }
  std::vector<std::string> labels;
  labels.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      labels.push_back("r" + std::to_string(r + 1) + "c" + std::to_string(c + 1));
    }
  }
  std::vector<Edge> edges;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t j = r * cols + c;
      if (c + 1 < cols) edges.push_back({j, j + 1});
      if (r + 1 < rows) edges.push_back({j, j + cols});
    }
  }
  return ArealGraph(std::move(labels), std::move(edges));
}

ArealGraph parse_adjacency(std::istream& in) {
  std::vector<std::string> labels;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<Edge> edges;
  std::set<Edge> seen;
  bool have_header = false;

  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string text = csv::trim(raw);
    if (line == 1 && text.starts_with("\xEF\xBB\xBF")) text = csv::trim(text.substr(3));
    if (text.empty() || text.front() == '#') continue;
    if (!have_header) {
      constexpr std::string_view kPrefix = "regions:";
      if (!text.starts_with(kPrefix)) {
        throw GraphError(GraphErrorKind::kMalformed,
                         "expected 'regions: <label>,...' header", line);
      }
      const std::string rest = csv::trim(text.substr(kPrefix.size()));
      if (rest.empty()) throw GraphError(GraphErrorKind::kEmptyGraph, "no regions declared", line);
      for (auto& label : csv::split(rest)) {
        if (label.empty()) {
          throw GraphError(GraphErrorKind::kMalformed, "empty region label", line);
        }
        if (!index.emplace(label, labels.size()).second) {
          throw GraphError(GraphErrorKind::kDuplicateLabel,
                           "region label '" + label + "' declared twice", line);
        }
        labels.push_back(label);
      }
      if (labels.empty()) {
        throw GraphError(GraphErrorKind::kEmptyGraph, "no regions declared", line);
      }
      have_header = true;
      continue;
    }
    const auto fields = csv::split(text);
    if (fields.size() != 2) {
      throw GraphError(GraphErrorKind::kMalformed, "edge line must have two labels", line);
    }
    std::size_t ends[2];
    for (int t = 0; t < 2; ++t) {
      auto it = index.find(fields[t]);
      if (it == index.end()) {
        throw GraphError(GraphErrorKind::kUnknownLabel,
                         "unknown region label '" + fields[t] + "'", line);
      }
      ends[t] = it->second;
    }
    if (ends[0] == ends[1]) {
      throw GraphError(GraphErrorKind::kSelfLoop, "self-loop on '" + fields[0] + "'", line);
    }
    Edge e{std::min(ends[0], ends[1]), std::max(ends[0], ends[1])};
    if (!seen.insert(e).second) {
      throw GraphError(GraphErrorKind::kDuplicateEdge,
                       "duplicate edge " + fields[0] + "," + fields[1], line);
    }
    edges.push_back(e);
  }
  if (!have_header) throw GraphError(GraphErrorKind::kEmptyGraph, "no regions declared");

  ArealGraph g(std::move(labels), std::move(edges));
  if (const auto c = g.num_components(); c > 1) {
    std::clog << "warning: adjacency graph has " << c << " connected components\n";
  }
  return g;
}

ArealGraph load_adjacency(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open adjacency file " + path.string());
  return parse_adjacency(in);
}

void write_adjacency(std::ostream& out, const ArealGraph& g) {
  out << "regions: ";
  for (std::size_t j = 0; j < g.size(); ++j) out << (j ? "," : "") << g.labels()[j];
  out << '\n';
  for (const Edge& e : g.edges()) {
    out << g.labels()[e.first] << ',' << g.labels()[e.second] << '\n';
  }
}

}  // namespace mdagar
