#include "gelato/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace gelato {

double CsrMatrix::at(NodeId u, NodeId v) const {
  auto c = cols(u);
  auto it = std::lower_bound(c.begin(), c.end(), v);
  if (it == c.end() || *it != v) return 0.0;
  return val[row_ptr[u] + (it - c.begin())];
}

std::vector<double> CsrMatrix::row_sums() const {
  std::vector<double> sums(n, 0.0);
  for (NodeId u = 0; u < n; ++u) {
    double s = 0.0;
    for (double w : vals(u)) s += w;
    sums[u] = s;
  }
  return sums;
}

CsrMatrix symmetric_csr(NodeId n, std::span<const WeightedEdge> edges,
                        std::span<const double> self_loops) {
  CsrMatrix m;
  m.n = n;
  std::vector<std::int64_t> count(n + 1, 0);
  for (const auto& e : edges) {
    ++count[e.u + 1];
    ++count[e.v + 1];
  }
  for (NodeId u = 0; u < static_cast<NodeId>(self_loops.size()); ++u) {
    if (self_loops[u] > 0.0) ++count[u + 1];
  }
  for (NodeId u = 0; u < n; ++u) count[u + 1] += count[u];
  m.row_ptr = count;
  m.col.resize(count[n]);
  m.val.resize(count[n]);
  std::vector<std::int64_t> cursor(count.begin(), count.end() - 1);
  for (const auto& e : edges) {
    m.col[cursor[e.u]] = e.v;
    m.val[cursor[e.u]++] = e.w;
    m.col[cursor[e.v]] = e.u;
    m.val[cursor[e.v]++] = e.w;
  }
  for (NodeId u = 0; u < static_cast<NodeId>(self_loops.size()); ++u) {
    if (self_loops[u] > 0.0) {
      m.col[cursor[u]] = u;
      m.val[cursor[u]++] = self_loops[u];
    }
  }
  // Sort each row by column.
  std::vector<std::pair<NodeId, double>> row;
  for (NodeId u = 0; u < n; ++u) {
    auto b = m.row_ptr[u], e = m.row_ptr[u + 1];
    row.clear();
    for (auto i = b; i < e; ++i) row.emplace_back(m.col[i], m.val[i]);
    std::sort(row.begin(), row.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto i = b; i < e; ++i) {
      m.col[i] = row[i - b].first;
      m.val[i] = row[i - b].second;
    }
  }
  return m;
}

DegreeView compute_degrees(const CsrMatrix& a) {
  DegreeView view;
  view.d = a.row_sums();
  for (double x : view.d) view.vol += x;
  return view;
}

AttributedGraph AttributedGraph::from_edges(NodeId n,
                                            std::vector<WeightedEdge> edges,
                                            std::vector<double> attrs,
                                            int attr_dim) {
  if (n < 0) throw Error(ErrorCode::kParameter, "negative node count");
  if (attr_dim < 0) throw Error(ErrorCode::kParameter, "negative attr dim");
  if (attrs.size() != static_cast<std::size_t>(n) * attr_dim) {
    throw Error(ErrorCode::kDimension,
                "attribute matrix has " + std::to_string(attrs.size()) +
                    " entries, expected " +
                    std::to_string(static_cast<std::size_t>(n) * attr_dim));
  }

  struct Entry {
    std::uint64_t key;
    bool flipped;
    double w;
  };
  std::vector<Entry> entries;
  entries.reserve(edges.size());
  for (const auto& e : edges) {
    if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n) {
      throw Error(ErrorCode::kRange, "edge (" + std::to_string(e.u) + ", " +
                                         std::to_string(e.v) +
                                         ") outside node range [0, " +
                                         std::to_string(n) + ")");
    }
    if (e.u == e.v) {
      throw Error(ErrorCode::kParameter,
                  "self-loop on node " + std::to_string(e.u));
    }
    if (!(e.w > 0.0) || !std::isfinite(e.w)) {
      throw Error(ErrorCode::kParameter,
                  "edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                      ") has non-positive or non-finite weight");
    }
    entries.push_back({pair_key(canonical_pair(e.u, e.v)), e.u > e.v, e.w});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.key != b.key ? a.key < b.key : a.flipped < b.flipped;
  });

  std::vector<WeightedEdge> unique;
  unique.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i + 1;
    while (j < entries.size() && entries[j].key == entries[i].key) ++j;
    NodePair p = pair_from_key(entries[i].key);
    std::string name =
        "(" + std::to_string(p.u) + ", " + std::to_string(p.v) + ")";
    if (j - i > 2 || (j - i == 2 && !entries[i + 1].flipped)) {
      throw Error(ErrorCode::kConflict, "duplicate undirected edge " + name);
    }
    if (j - i == 2 && entries[i].flipped) {
      throw Error(ErrorCode::kConflict, "duplicate undirected edge " + name);
    }
    if (j - i == 2 && entries[i].w != entries[i + 1].w) {
      throw Error(ErrorCode::kConflict,
                  "conflicting weights for edge " + name);
    }
    unique.push_back({p.u, p.v, entries[i].w});
    i = j;
  }

  AttributedGraph g;
  g.adjacency_ = symmetric_csr(n, unique);
  g.degrees_ = compute_degrees(g.adjacency_);
  g.attrs_ = std::move(attrs);
  g.attr_dim_ = attr_dim;
  return g;
}

std::vector<WeightedEdge> AttributedGraph::edges() const {
  std::vector<WeightedEdge> out;
  out.reserve(num_edges());
  for (NodeId u = 0; u < num_nodes(); ++u) {
    auto c = adjacency_.cols(u);
    auto w = adjacency_.vals(u);
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c[i] > u) out.push_back({u, c[i], w[i]});
    }
  }
  return out;
}

std::vector<NodePair> AttributedGraph::edge_pairs() const {
  std::vector<NodePair> out;
  out.reserve(num_edges());
  for (NodeId u = 0; u < num_nodes(); ++u) {
    for (NodeId v : adjacency_.cols(u)) {
      if (v > u) out.push_back({u, v});
    }
  }
  return out;
}

AttributedGraph AttributedGraph::with_edges(
    std::vector<WeightedEdge> edges) const {
  return from_edges(num_nodes(), std::move(edges), attrs_, attr_dim_);
}

double cosine_similarity(std::span<const double> x,
                         std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::kDimension,
                "cosine similarity of vectors with lengths " +
                    std::to_string(x.size()) + " and " +
                    std::to_string(y.size()));
  }
  double dot = 0.0, nx = 0.0, ny = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    nx += x[i] * x[i];
    ny += y[i] * y[i];
  }
  if (nx == 0.0 || ny == 0.0) return 0.0;
  double c = dot / (std::sqrt(nx) * std::sqrt(ny));
  return std::clamp(c, -1.0, 1.0);
}

// ---------------------------------------------------------------------------

std::string format_real(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x,
                           std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_real(std::string_view text) {
  double value = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kParse,
                "invalid real '" + std::string(text) + "'");
  }
  return value;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

bool skippable(std::string_view line) {
  auto pos = line.find_first_not_of(" \t");
  return pos == std::string_view::npos || line[pos] == '#';
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open " + path.string());
  }
  return in;
}

Error parse_error(const std::filesystem::path& path, std::size_t line_no,
                  const std::string& what) {
  return Error(ErrorCode::kParse, path.string() + ":" +
                                      std::to_string(line_no) + ": " + what);
}

NodeId parse_node(std::string_view text) {
  std::int64_t v = -1;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || v < 0 ||
      v > 0x7ffffffe) {
    throw Error(ErrorCode::kParse, "invalid node id '" + std::string(text) + "'");
  }
  return static_cast<NodeId>(v);
}

struct RawEdges {
  std::vector<WeightedEdge> edges;
  NodeId max_id = -1;
};

// `resolve` maps a node token to a dense id.
template <class Resolve>
RawEdges read_edge_file(const std::filesystem::path& path, Resolve&& resolve) {
  auto in = open_input(path);
  RawEdges raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(std::move(line));
    if (skippable(line)) continue;
    auto fields = split_fields(line);
    if (fields.size() != 2 && fields.size() != 3) {
      throw parse_error(path, line_no, "expected 'u v' or 'u v weight'");
    }
    WeightedEdge e;
    try {
      e.u = resolve(fields[0]);
      e.v = resolve(fields[1]);
      if (fields.size() == 3) e.w = parse_real(fields[2]);
    } catch (const Error& err) {
      throw parse_error(path, line_no, err.what());
    }
    if (e.u == e.v) throw parse_error(path, line_no, "self-loop");
    if (!(e.w > 0.0) || !std::isfinite(e.w)) {
      throw parse_error(path, line_no, "weight must be positive and finite");
    }
    raw.max_id = std::max({raw.max_id, e.u, e.v});
    raw.edges.push_back(e);
  }
  return raw;
}

struct RawAttributes {
  NodeId rows = 0;
  int dim = 0;
  std::vector<double> values;
};

RawAttributes read_attribute_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  RawAttributes raw;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  NodeId row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(std::move(line));
    auto fields = split_fields(line);
    if (!have_header) {
      if (skippable(line)) continue;
      if (fields.size() != 2) throw parse_error(path, line_no, "expected 'n r'");
      try {
        raw.rows = parse_node(fields[0]);
        raw.dim = parse_node(fields[1]);
      } catch (const Error& err) {
        throw parse_error(path, line_no, err.what());
      }
      raw.values.reserve(static_cast<std::size_t>(raw.rows) * raw.dim);
      have_header = true;
      continue;
    }
    if (row == raw.rows) {
      if (fields.empty()) continue;
      throw parse_error(path, line_no, "more rows than declared");
    }
    if (fields.size() != static_cast<std::size_t>(raw.dim)) {
      throw parse_error(path, line_no,
                        "expected " + std::to_string(raw.dim) + " values");
    }
    for (auto f : fields) {
      try {
        raw.values.push_back(parse_real(f));
      } catch (const Error& err) {
        throw parse_error(path, line_no, err.what());
      }
    }
    ++row;
  }
  if (!have_header) throw parse_error(path, line_no, "missing header");
  if (row != raw.rows) {
    throw parse_error(path, line_no,
                      "declared " + std::to_string(raw.rows) +
                          " rows, found " + std::to_string(row));
  }
  return raw;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

}  // namespace

AttributedGraph load_graph(const std::filesystem::path& edge_path,
                           const std::optional<std::filesystem::path>& attr_path) {
  RawEdges raw = read_edge_file(edge_path, parse_node);
  if (!attr_path) {
    return AttributedGraph::from_edges(raw.max_id + 1, std::move(raw.edges));
  }
  RawAttributes attrs = read_attribute_file(*attr_path);
  if (raw.max_id >= attrs.rows) {
    throw Error(ErrorCode::kRange,
                "node id " + std::to_string(raw.max_id) +
                    " has no attribute row (attribute file has " +
                    std::to_string(attrs.rows) + " rows)");
  }
  return AttributedGraph::from_edges(attrs.rows, std::move(raw.edges),
                                     std::move(attrs.values), attrs.dim);
}

RemappedGraph load_graph_remapped(const std::filesystem::path& edge_path) {
  RemappedGraph out;
  std::unordered_map<std::string, NodeId> ids;
  auto resolve = [&](std::string_view token) {
    auto [it, inserted] =
        ids.try_emplace(std::string(token), static_cast<NodeId>(ids.size()));
    if (inserted) out.original_ids.emplace_back(token);
    return it->second;
  };
  RawEdges raw = read_edge_file(edge_path, resolve);
  out.graph = AttributedGraph::from_edges(static_cast<NodeId>(ids.size()),
                                          std::move(raw.edges));
  return out;
}

void save_edges(const AttributedGraph& g, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& e : g.edges()) {
    out << e.u << '\t' << e.v;
    if (e.w != 1.0) out << '\t' << format_real(e.w);
    out << '\n';
  }
}

void save_attributes(const AttributedGraph& g,
                     const std::filesystem::path& path) {
  auto out = open_output(path);
  out << g.num_nodes() << ' ' << g.attr_dim() << '\n';
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    auto row = g.attributes(u);
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ' ';
      out << format_real(row[i]);
    }
    out << '\n';
  }
}

void save_id_map(std::span<const std::string> original_ids,
                 const std::filesystem::path& path) {
  auto out = open_output(path);
  for (std::size_t i = 0; i < original_ids.size(); ++i) {
    out << i << '\t' << original_ids[i] << '\n';
  }
}

}  // namespace gelato
