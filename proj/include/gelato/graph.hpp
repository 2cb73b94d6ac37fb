#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gelato/common.hpp"

namespace gelato {

// Compressed-row sparse matrix. Column indices are sorted within each row.
struct CsrMatrix {
  NodeId n = 0;
  std::vector<std::int64_t> row_ptr{0};
  std::vector<NodeId> col;
  std::vector<double> val;

  std::size_t nnz() const { return col.size(); }

  std::span<const NodeId> cols(NodeId u) const {
    return {col.data() + row_ptr[u],
            static_cast<std::size_t>(row_ptr[u + 1] - row_ptr[u])};
  }
  std::span<const double> vals(NodeId u) const {
    return {val.data() + row_ptr[u],
            static_cast<std::size_t>(row_ptr[u + 1] - row_ptr[u])};
  }

  // Stored value at (u, v), 0 when absent. O(log deg).
  double at(NodeId u, NodeId v) const;

  std::vector<double> row_sums() const;
};

struct WeightedEdge {
  NodeId u = 0;
  NodeId v = 0;
  double w = 1.0;
};

// Builds the symmetric matrix holding every pair in both orientations plus
// optional diagonal entries (self_loops[u] > 0 adds A_uu).
CsrMatrix symmetric_csr(NodeId n, std::span<const WeightedEdge> edges,
                        std::span<const double> self_loops = {});

struct DegreeView {
  std::vector<double> d;
  double vol = 0.0;
};

// Immutable undirected weighted graph with per-node attribute rows.
class AttributedGraph {
 public:
  AttributedGraph() = default;

  // Validates and builds. Edges may come in either orientation; listing a
  // pair in both orientations with the same weight is accepted once.
  // attrs is row-major n x attr_dim (empty when attr_dim == 0).
  static AttributedGraph from_edges(NodeId n, std::vector<WeightedEdge> edges,
                                    std::vector<double> attrs = {},
                                    int attr_dim = 0);

  NodeId num_nodes() const { return adjacency_.n; }
  std::size_t num_edges() const { return adjacency_.nnz() / 2; }
  int attr_dim() const { return attr_dim_; }
  bool has_attributes() const { return attr_dim_ > 0; }

  const CsrMatrix& adjacency() const { return adjacency_; }
  const DegreeView& degrees() const { return degrees_; }
  const std::vector<double>& attribute_matrix() const { return attrs_; }

  std::span<const double> attributes(NodeId u) const {
    return {attrs_.data() + static_cast<std::size_t>(u) * attr_dim_,
            static_cast<std::size_t>(attr_dim_)};
  }

  std::span<const NodeId> neighbors(NodeId u) const {
    return adjacency_.cols(u);
  }
  std::size_t degree_count(NodeId u) const { return neighbors(u).size(); }

  bool has_edge(NodeId u, NodeId v) const { return adjacency_.at(u, v) > 0.0; }
  double weight(NodeId u, NodeId v) const { return adjacency_.at(u, v); }

  // Canonical (u < v) edge list in ascending pair order.
  std::vector<WeightedEdge> edges() const;
  std::vector<NodePair> edge_pairs() const;

  // Same nodes and attributes, different edge set.
  AttributedGraph with_edges(std::vector<WeightedEdge> edges) const;

 private:
  CsrMatrix adjacency_;
  DegreeView degrees_;
  std::vector<double> attrs_;
  int attr_dim_ = 0;
};

DegreeView compute_degrees(const CsrMatrix& a);

// Cosine similarity; 0 when either vector has zero norm.
double cosine_similarity(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Text formats.
//
// Edge file: one edge per line, "u<TAB>v" or "u<TAB>v<TAB>weight" (any
// whitespace accepted on read); '#' lines and blank lines are skipped.
// Attribute file: "n r" header, then n rows of r reals.

AttributedGraph load_graph(
    const std::filesystem::path& edge_path,
    const std::optional<std::filesystem::path>& attr_path = std::nullopt);

struct RemappedGraph {
  AttributedGraph graph;
  // original_ids[dense id] is the token that appeared in the edge file.
  std::vector<std::string> original_ids;
};

// Loads an edge file whose node tokens are arbitrary strings, assigning
// dense ids in order of first appearance.
RemappedGraph load_graph_remapped(const std::filesystem::path& edge_path);

void save_edges(const AttributedGraph& g, const std::filesystem::path& path);
void save_attributes(const AttributedGraph& g,
                     const std::filesystem::path& path);
void save_id_map(std::span<const std::string> original_ids,
                 const std::filesystem::path& path);

// 17 significant digits, shortest-exponent form; parses back bit-exactly.
std::string format_real(double x);
double parse_real(std::string_view text);

}  // namespace gelato
