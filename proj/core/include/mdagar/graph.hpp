#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/SparseCore>

#include "mdagar/errors.hpp"

namespace mdagar {

/// Undirected edge between two regions, stored with first < second.
/// Indices are 0-based positions in the graph's fixed region ordering.
struct Edge {
  std::size_t first = 0;
  std::size_t second = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

enum class GraphErrorKind {
  kMalformed,
  kEmptyGraph,
  kSelfLoop,
  kDuplicateEdge,
  kUnknownLabel,
  kDuplicateLabel,
  kIndexOutOfRange,
  kZeroDimension,
};

class GraphError : public ValidationError {
 public:
  GraphError(GraphErrorKind kind, const std::string& message, std::size_t line = 0);
  GraphErrorKind kind() const noexcept { return kind_; }
  /// Source line of the offending record, 0 when not file-backed.
  std::size_t line() const noexcept { return line_; }

 private:
  GraphErrorKind kind_;
  std::size_t line_;
};

/// Earlier-ordered neighbors N(j) = {j' < j : j' ~ j} in CSR layout.
class DirectedNeighborSets {
 public:
  DirectedNeighborSets() = default;
  DirectedNeighborSets(std::vector<std::size_t> offsets, std::vector<std::size_t> members);

  std::size_t size() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::span<const std::size_t> of(std::size_t j) const {
    return {members_.data() + offsets_[j], offsets_[j + 1] - offsets_[j]};
  }
  /// n_{<j}
  std::size_t count(std::size_t j) const { return offsets_[j + 1] - offsets_[j]; }
  std::size_t total() const noexcept { return members_.size(); }

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<std::size_t> members_;
};

/// Ordered region set with a symmetric neighbor relation. Immutable after
/// construction; region order is the order of `labels`.
class ArealGraph {
 public:
  /// Validates: non-empty, unique labels, indices in range, no self loops,
  /// no duplicate edges (in either orientation).
  ArealGraph(std::vector<std::string> labels, std::vector<Edge> edges);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  /// Edges sorted lexicographically, each with first < second.
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  /// Sorted undirected neighbor list of region j.
  std::span<const std::size_t> neighbors(std::size_t j) const {
    return {adjacency_.data() + offsets_[j], offsets_[j + 1] - offsets_[j]};
  }
  std::size_t degree(std::size_t j) const { return offsets_[j + 1] - offsets_[j]; }
  bool adjacent(std::size_t a, std::size_t b) const;
  std::optional<std::size_t> index_of(std::string_view label) const;
  std::size_t num_components() const;

  /// Directed sets for this ordering, computed once at construction.
  const DirectedNeighborSets& directed() const noexcept { return directed_; }

  /// Same regions and edges, relabeled so that new position p holds old
  /// region order[p].
  ArealGraph permuted(std::span<const std::size_t> order) const;

  /// Subgraph on `keep` (old indices, in the given order).
  ArealGraph induced(std::span<const std::size_t> keep) const;

 private:
  std::vector<std::string> labels_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> adjacency_;
  std::unordered_map<std::string, std::size_t> index_;
  DirectedNeighborSets directed_;
};

DirectedNeighborSets directed_neighbor_sets(const ArealGraph& g);

/// Binary symmetric adjacency matrix M with m_{jj'} = 1 iff j ~ j'.
Eigen::SparseMatrix<double> adjacency_matrix(const ArealGraph& g);

/// Rook-adjacency lattice in row-major order, labels "r<row>c<col>" (1-based).
ArealGraph grid_graph(std::size_t rows, std::size_t cols);

/// Parses the edge-list format:
///   regions: A,B,C
///   A,B
///   # comment
/// Region order is the declaration order on the `regions:` line.
/// Disconnected graphs are accepted; a warning goes to std::clog.
ArealGraph parse_adjacency(std::istream& in);
ArealGraph load_adjacency(const std::filesystem::path& path);

void write_adjacency(std::ostream& out, const ArealGraph& g);

}  // namespace mdagar
