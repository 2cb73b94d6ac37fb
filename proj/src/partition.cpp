#include "gelato/partition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "gelato/random.hpp"

namespace gelato {

Partitioning make_partitioning(const AttributedGraph& g, std::vector<int> assign,
                               int k) {
  if (k < 1) throw Error(ErrorCode::kParameter, "k must be at least 1");
  if (assign.size() != static_cast<std::size_t>(g.num_nodes())) {
    throw Error(ErrorCode::kParameter,
                "assignment covers " + std::to_string(assign.size()) +
                    " nodes, graph has " + std::to_string(g.num_nodes()));
  }
  Partitioning part;
  part.k = k;
  part.blocks.assign(k, {});
  part.intra_edges.assign(k, 0);
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    if (assign[u] < 0 || assign[u] >= k) {
      throw Error(ErrorCode::kParameter,
                  "block id " + std::to_string(assign[u]) + " of node " +
                      std::to_string(u) + " outside [0, " + std::to_string(k) +
                      ")");
    }
    part.blocks[assign[u]].push_back(u);
  }
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    for (NodeId v : g.neighbors(u)) {
      if (v > u && assign[u] == assign[v]) ++part.intra_edges[assign[u]];
    }
  }
  part.assign = std::move(assign);
  return part;
}

std::int64_t max_block_size(NodeId n, int k, double imbalance) {
  // Nudged down so that exact products like 1.05 * 40 / 4 do not round up.
  double limit = (1.0 + imbalance) * static_cast<double>(n) / k;
  return static_cast<std::int64_t>(std::ceil(limit - 1e-9));
}

double edge_cut(const AttributedGraph& g, std::span<const int> assign) {
  double cut = 0.0;
  const auto& a = g.adjacency();
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    auto c = a.cols(u);
    auto w = a.vals(u);
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c[i] > u && assign[u] != assign[c[i]]) cut += w[i];
    }
  }
  return cut;
}

namespace {

// Graph at one level of the hierarchy. No self-loops; vertex weights count
// the fine nodes each supernode stands for.
struct LevelGraph {
  CsrMatrix adj;
  std::vector<std::int64_t> vwgt;

  NodeId size() const { return adj.n; }
};

struct Level {
  LevelGraph graph;
  std::vector<NodeId> to_coarse;  // fine node -> coarse node of next level
};

LevelGraph coarsen(const LevelGraph& fine, std::int64_t weight_cap, Rng& rng,
                   std::vector<NodeId>& cmap) {
  const NodeId n = fine.size();
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  std::vector<NodeId> match(n, -1);
  for (NodeId u : order) {
    if (match[u] != -1) continue;
    NodeId best = -1;
    double best_w = -1.0;
    auto c = fine.adj.cols(u);
    auto w = fine.adj.vals(u);
    for (std::size_t i = 0; i < c.size(); ++i) {
      NodeId v = c[i];
      if (match[v] != -1 || fine.vwgt[u] + fine.vwgt[v] > weight_cap) continue;
      // Heaviest edge; ties go to the lowest id.
      if (w[i] > best_w || (w[i] == best_w && v < best)) {
        best = v;
        best_w = w[i];
      }
    }
    if (best == -1) {
      match[u] = u;
    } else {
      match[u] = best;
      match[best] = u;
    }
  }

  cmap.assign(n, -1);
  NodeId coarse_n = 0;
  for (NodeId u = 0; u < n; ++u) {
    if (cmap[u] != -1) continue;
    cmap[u] = coarse_n;
    cmap[match[u]] = coarse_n;
    ++coarse_n;
  }

  LevelGraph coarse;
  coarse.vwgt.assign(coarse_n, 0);
  for (NodeId u = 0; u < n; ++u) coarse.vwgt[cmap[u]] += fine.vwgt[u];

  // Members of each coarse node, to build rows in order.
  std::vector<std::vector<NodeId>> members(coarse_n);
  for (NodeId u = 0; u < n; ++u) members[cmap[u]].push_back(u);

  coarse.adj.n = coarse_n;
  coarse.adj.row_ptr.assign(1, 0);
  std::unordered_map<NodeId, double> acc;
  std::vector<std::pair<NodeId, double>> row;
  for (NodeId cu = 0; cu < coarse_n; ++cu) {
    acc.clear();
    for (NodeId u : members[cu]) {
      auto c = fine.adj.cols(u);
      auto w = fine.adj.vals(u);
      for (std::size_t i = 0; i < c.size(); ++i) {
        NodeId cv = cmap[c[i]];
        if (cv != cu) acc[cv] += w[i];
      }
    }
    row.assign(acc.begin(), acc.end());
    std::sort(row.begin(), row.end());
    for (auto& [cv, w] : row) {
      coarse.adj.col.push_back(cv);
      coarse.adj.val.push_back(w);
    }
    coarse.adj.row_ptr.push_back(static_cast<std::int64_t>(coarse.adj.col.size()));
  }
  return coarse;
}

double level_cut(const LevelGraph& g, const std::vector<int>& assign) {
  double cut = 0.0;
  for (NodeId u = 0; u < g.size(); ++u) {
    auto c = g.adj.cols(u);
    auto w = g.adj.vals(u);
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c[i] > u && assign[u] != assign[c[i]]) cut += w[i];
    }
  }
  return cut;
}

double connection(const LevelGraph& g, const std::vector<int>& assign, NodeId u,
                  int block) {
  double s = 0.0;
  auto c = g.adj.cols(u);
  auto w = g.adj.vals(u);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (assign[c[i]] == block) s += w[i];
  }
  return s;
}

// Greedy graph growing: blocks 0..k-2 grow from a seed node by absorbing the
// most strongly connected unassigned node; the last block takes the rest.
std::vector<int> grow_initial(const LevelGraph& g, int k, std::int64_t max_w,
                              Rng* rng) {
  const NodeId n = g.size();
  std::vector<int> assign(n, -1);
  std::int64_t total = std::accumulate(g.vwgt.begin(), g.vwgt.end(),
                                       std::int64_t{0});
  std::int64_t remaining = total;
  std::vector<double> conn(n, 0.0);
  for (int b = 0; b + 1 < k; ++b) {
    std::int64_t target = remaining / (k - b);
    std::int64_t weight = 0;
    std::fill(conn.begin(), conn.end(), 0.0);
    std::vector<char> skipped(n, 0);
    bool first = true;
    while (weight < target) {
      NodeId pick = -1;
      if (first && rng != nullptr) {
        std::vector<NodeId> free;
        for (NodeId u = 0; u < n; ++u) {
          if (assign[u] == -1) free.push_back(u);
        }
        if (!free.empty()) pick = free[rng->below(free.size())];
      } else {
        double best = -1.0;
        for (NodeId u = 0; u < n; ++u) {
          if (assign[u] != -1 || skipped[u]) continue;
          if (conn[u] > best) {
            best = conn[u];
            pick = u;
          }
        }
      }
      first = false;
      if (pick == -1) break;
      if (weight + g.vwgt[pick] > max_w) {
        skipped[pick] = 1;
        continue;
      }
      assign[pick] = b;
      weight += g.vwgt[pick];
      auto c = g.adj.cols(pick);
      auto w = g.adj.vals(pick);
      for (std::size_t i = 0; i < c.size(); ++i) conn[c[i]] += w[i];
    }
    remaining -= weight;
  }
  for (auto& a : assign) {
    if (a == -1) a = k - 1;
  }
  return assign;
}

std::vector<std::int64_t> block_weights(const LevelGraph& g,
                                        const std::vector<int>& assign, int k) {
  std::vector<std::int64_t> bw(k, 0);
  for (NodeId u = 0; u < g.size(); ++u) bw[assign[u]] += g.vwgt[u];
  return bw;
}

// Moves nodes out of overweight blocks (and into empty blocks) at the lowest
// cut cost. Stops early if the level's vertex weights make it infeasible.
void rebalance(const LevelGraph& g, std::vector<int>& assign, int k,
               std::int64_t max_w, bool fill_empty) {
  auto bw = block_weights(g, assign, k);
  const NodeId n = g.size();
  for (int guard = 0; guard < 4 * n + 4 * k; ++guard) {
    int over = -1;
    for (int b = 0; b < k; ++b) {
      if (bw[b] > max_w) {
        over = b;
        break;
      }
    }
    int empty = -1;
    if (over == -1 && fill_empty) {
      for (int b = 0; b < k; ++b) {
        if (bw[b] == 0) {
          empty = b;
          break;
        }
      }
    }
    if (over == -1 && empty == -1) return;

    NodeId best_u = -1;
    int best_to = -1;
    double best_loss = std::numeric_limits<double>::infinity();
    if (over != -1) {
      for (NodeId u = 0; u < n; ++u) {
        if (assign[u] != over) continue;
        double own = connection(g, assign, u, over);
        for (int c = 0; c < k; ++c) {
          if (c == over || bw[c] + g.vwgt[u] > max_w) continue;
          double loss = own - connection(g, assign, u, c);
          if (loss < best_loss) {
            best_loss = loss;
            best_u = u;
            best_to = c;
          }
        }
      }
    } else {
      int donor = static_cast<int>(std::max_element(bw.begin(), bw.end()) -
                                   bw.begin());
      for (NodeId u = 0; u < n; ++u) {
        if (assign[u] != donor || bw[donor] - g.vwgt[u] <= 0) continue;
        double loss = connection(g, assign, u, donor) -
                      connection(g, assign, u, empty);
        if (loss < best_loss) {
          best_loss = loss;
          best_u = u;
          best_to = empty;
        }
      }
    }
    if (best_u == -1) return;
    bw[assign[best_u]] -= g.vwgt[best_u];
    bw[best_to] += g.vwgt[best_u];
    assign[best_u] = best_to;
  }
}

// One Fiduccia-Mattheyses style pass: tentative best-gain moves (negative
// gains allowed), then rollback to the best prefix. Returns the cut gain.
double fm_pass(const LevelGraph& g, std::vector<int>& assign, int k,
               std::int64_t max_w, int max_stall) {
  const NodeId n = g.size();
  auto bw = block_weights(g, assign, k);
  std::vector<char> locked(n, 0);

  using Entry = std::tuple<double, NodeId, int>;  // (-gain, node, target)
  std::set<Entry> queue;
  std::vector<Entry> current(n);
  std::vector<char> queued(n, 0);
  std::vector<double> conn_scratch(k, 0.0);
  std::vector<int> touched;

  auto best_move = [&](NodeId u, Entry& out) {
    touched.clear();
    auto c = g.adj.cols(u);
    auto w = g.adj.vals(u);
    for (std::size_t i = 0; i < c.size(); ++i) {
      int b = assign[c[i]];
      if (conn_scratch[b] == 0.0) touched.push_back(b);
      conn_scratch[b] += w[i];
    }
    int own = assign[u];
    double own_conn = conn_scratch[own];
    bool found = false;
    std::sort(touched.begin(), touched.end());
    for (int b : touched) {
      if (b == own || bw[b] + g.vwgt[u] > max_w) continue;
      double gain = conn_scratch[b] - own_conn;
      Entry e{-gain, u, b};
      if (!found || e < out) {
        out = e;
        found = true;
      }
    }
    for (int b : touched) conn_scratch[b] = 0.0;
    return found && bw[own] - g.vwgt[u] > 0;
  };

  auto requeue = [&](NodeId u) {
    if (queued[u]) {
      queue.erase(current[u]);
      queued[u] = 0;
    }
    if (locked[u]) return;
    Entry e;
    if (best_move(u, e)) {
      current[u] = e;
      queue.insert(e);
      queued[u] = 1;
    }
  };

  for (NodeId u = 0; u < n; ++u) requeue(u);

  std::vector<std::pair<NodeId, int>> moves;  // (node, previous block)
  double cumulative = 0.0, best = 0.0;
  std::size_t best_len = 0;
  int stall = 0;
  while (!queue.empty() && stall < max_stall) {
    Entry e = *queue.begin();
    queue.erase(queue.begin());
    auto [neg_gain, u, to] = e;
    queued[u] = 0;
    // Block weights may have changed since the entry was computed.
    Entry fresh;
    if (!best_move(u, fresh)) continue;
    if (fresh != e) {
      current[u] = fresh;
      queue.insert(fresh);
      queued[u] = 1;
      continue;
    }
    int from = assign[u];
    bw[from] -= g.vwgt[u];
    bw[to] += g.vwgt[u];
    assign[u] = to;
    locked[u] = 1;
    moves.emplace_back(u, from);
    cumulative += -neg_gain;
    if (cumulative > best + 1e-12) {
      best = cumulative;
      best_len = moves.size();
      stall = 0;
    } else {
      ++stall;
    }
    for (NodeId v : g.adj.cols(u)) requeue(v);
  }
  for (std::size_t i = moves.size(); i > best_len; --i) {
    assign[moves[i - 1].first] = moves[i - 1].second;
  }
  return best;
}

void refine_level(const LevelGraph& g, std::vector<int>& assign, int k,
                  std::int64_t max_w, const PartitionOptions& options) {
  for (int pass = 0; pass < options.refine_passes; ++pass) {
    if (fm_pass(g, assign, k, max_w, options.max_stall_moves) <= 1e-12) break;
  }
}

LevelGraph level_from(const AttributedGraph& g) {
  LevelGraph lg;
  lg.adj = g.adjacency();
  lg.vwgt.assign(g.num_nodes(), 1);
  return lg;
}

}  // namespace

void refine_partition(const AttributedGraph& g, std::vector<int>& assign, int k,
                      const PartitionOptions& options) {
  LevelGraph lg = level_from(g);
  refine_level(lg, assign, k, max_block_size(g.num_nodes(), k, options.imbalance),
               options);
}

Partitioning partition(const AttributedGraph& g, int k, std::uint64_t seed,
                       const PartitionOptions& options) {
  const NodeId n = g.num_nodes();
  if (k < 1) throw Error(ErrorCode::kParameter, "k must be at least 1");
  if (k > n) {
    throw Error(ErrorCode::kParameter, "k = " + std::to_string(k) +
                                           " exceeds node count " +
                                           std::to_string(n));
  }
  if (k == 1) return make_partitioning(g, std::vector<int>(n, 0), 1);

  const std::int64_t max_w = max_block_size(n, k, options.imbalance);
  const NodeId coarse_target = std::max<NodeId>(4 * k, options.min_coarse_nodes);
  const std::int64_t weight_cap = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::ceil(1.5 * n / coarse_target)));

  Rng rng(derive_seed(seed, "partition"));
  std::vector<Level> levels;
  levels.push_back({level_from(g), {}});
  while (levels.back().graph.size() > coarse_target) {
    std::vector<NodeId> cmap;
    LevelGraph coarse = coarsen(levels.back().graph, weight_cap, rng, cmap);
    // Matching stalled (e.g. many isolated nodes); stop coarsening.
    if (coarse.size() > 0.95 * levels.back().graph.size()) break;
    levels.back().to_coarse = std::move(cmap);
    levels.push_back({std::move(coarse), {}});
  }

  const LevelGraph& coarsest = levels.back().graph;
  std::vector<int> best_assign;
  double best_cut = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < std::max(1, options.initial_tries); ++attempt) {
    auto assign = grow_initial(coarsest, k, max_w, attempt == 0 ? nullptr : &rng);
    rebalance(coarsest, assign, k, max_w, levels.size() == 1);
    refine_level(coarsest, assign, k, max_w, options);
    double cut = level_cut(coarsest, assign);
    if (cut < best_cut) {
      best_cut = cut;
      best_assign = std::move(assign);
    }
  }

  std::vector<int> assign = std::move(best_assign);
  for (std::size_t lvl = levels.size() - 1; lvl-- > 0;) {
    const auto& fine = levels[lvl];
    std::vector<int> projected(fine.graph.size());
    for (NodeId u = 0; u < fine.graph.size(); ++u) {
      projected[u] = assign[fine.to_coarse[u]];
    }
    assign = std::move(projected);
    rebalance(fine.graph, assign, k, max_w, lvl == 0);
    refine_level(fine.graph, assign, k, max_w, options);
  }
  return make_partitioning(g, std::move(assign), k);
}

double modularity(const AttributedGraph& g, const Partitioning& part) {
  const double vol = g.degrees().vol;
  if (vol <= 0.0) {
    throw Error(ErrorCode::kUndefined, "modularity of a graph with zero volume");
  }
  if (part.assign.size() != static_cast<std::size_t>(g.num_nodes())) {
    throw Error(ErrorCode::kParameter, "partition size does not match graph");
  }
  std::vector<double> inner(part.k, 0.0), total(part.k, 0.0);
  const auto& a = g.adjacency();
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    int b = part.assign[u];
    total[b] += g.degrees().d[u];
    auto c = a.cols(u);
    auto w = a.vals(u);
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (part.assign[c[i]] == b) inner[b] += w[i];
    }
  }
  double q = 0.0;
  for (int b = 0; b < part.k; ++b) {
    double share = total[b] / vol;
    q += inner[b] / vol - share * share;
  }
  return q;
}

double modularity_two_way(const AttributedGraph& g, std::span<const int> signs) {
  const double vol = g.degrees().vol;
  if (vol <= 0.0) {
    throw Error(ErrorCode::kUndefined, "modularity of a graph with zero volume");
  }
  // sum_ij A_ij s_i s_j - (sum_i d_i s_i)^2 / vol
  const auto& a = g.adjacency();
  double adj_term = 0.0, signed_degree = 0.0;
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    signed_degree += g.degrees().d[u] * signs[u];
    auto c = a.cols(u);
    auto w = a.vals(u);
    for (std::size_t i = 0; i < c.size(); ++i) {
      adj_term += w[i] * signs[u] * signs[c[i]];
    }
  }
  return (adj_term - signed_degree * signed_degree / vol) / (2.0 * vol);
}

void save_partition(const Partitioning& part, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (std::size_t u = 0; u < part.assign.size(); ++u) {
    out << u << '\t' << part.assign[u] << '\n';
  }
}

Partitioning load_partition(const AttributedGraph& g,
                            const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<int> assign(g.num_nodes(), -1);
  std::string line;
  std::size_t line_no = 0;
  int k = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    long long node = -1, block = -1;
    if (!(fields >> node >> block) || node < 0 || block < 0) {
      throw Error(ErrorCode::kParse, path.string() + ":" +
                                         std::to_string(line_no) +
                                         ": expected 'node block'");
    }
    if (node >= g.num_nodes()) {
      throw Error(ErrorCode::kRange, path.string() + ":" +
                                         std::to_string(line_no) +
                                         ": node outside graph");
    }
    assign[node] = static_cast<int>(block);
    k = std::max(k, static_cast<int>(block) + 1);
  }
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    if (assign[u] == -1) {
      throw Error(ErrorCode::kParse,
                  path.string() + ": node " + std::to_string(u) + " unassigned");
    }
  }
  return make_partitioning(g, std::move(assign), std::max(k, 1));
}

}  // namespace gelato
