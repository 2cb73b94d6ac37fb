#include "gelato/splits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

namespace gelato {

const char* regime_name(SplitRegime regime) {
  switch (regime) {
    case SplitRegime::kUnbiased: return "unbiased";
    case SplitRegime::kBiased: return "biased";
    case SplitRegime::kPartitioned: return "partitioned";
  }
  return "unknown";
}

SplitRegime parse_regime(std::string_view name) {
  if (name == "unbiased") return SplitRegime::kUnbiased;
  if (name == "biased") return SplitRegime::kBiased;
  if (name == "partitioned") return SplitRegime::kPartitioned;
  throw Error(ErrorCode::kParameter, "unknown regime '" + std::string(name) + "'");
}

void SplitRatios::validate() const {
  if (train < 0.0 || valid < 0.0 || test < 0.0) {
    throw Error(ErrorCode::kParameter, "split ratios must be non-negative");
  }
  if (std::abs(train + valid + test - 1.0) > 1e-9) {
    throw Error(ErrorCode::kParameter, "split ratios must sum to 1");
  }
}

std::array<std::size_t, 3> split_sizes(std::size_t count,
                                       const SplitRatios& ratios) {
  const double exact[3] = {ratios.train * count, ratios.valid * count,
                           ratios.test * count};
  std::array<std::size_t, 3> sizes{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    sizes[i] = static_cast<std::size_t>(std::floor(exact[i] + 1e-9));
    assigned += sizes[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return exact[a] - sizes[a] > exact[b] - sizes[b];
  });
  for (std::size_t i = 0; assigned < count; ++i, ++assigned) ++sizes[order[i % 3]];
  return sizes;
}

// ---------------------------------------------------------------------------

NegativeSet NegativeSet::listed(std::vector<NodePair> pairs) {
  NegativeSet s;
  std::sort(pairs.begin(), pairs.end());
  s.pairs_ = std::move(pairs);
  return s;
}

NegativeSet NegativeSet::complement(std::shared_ptr<const AttributedGraph> graph,
                                    std::shared_ptr<const Partitioning> scope,
                                    std::vector<NodePair> extras) {
  NegativeSet s = listed(std::move(extras));
  s.graph_ = std::move(graph);
  s.scope_ = std::move(scope);
  if (s.scope_) {
    double acc = 0.0;
    for (int b = 0; b < s.scope_->k; ++b) {
      acc += static_cast<double>(choose2(s.scope_->block_size(b)));
      s.block_pair_cdf_.push_back(acc);
    }
  }
  return s;
}

NodeId NegativeSet::num_nodes() const { return graph_ ? graph_->num_nodes() : 0; }

std::int64_t NegativeSet::complement_size() const {
  if (!graph_) return 0;
  if (!scope_) {
    return choose2(graph_->num_nodes()) -
           static_cast<std::int64_t>(graph_->num_edges());
  }
  std::int64_t total = 0;
  for (int b = 0; b < scope_->k; ++b) {
    total += choose2(scope_->block_size(b)) - scope_->intra_edges[b];
  }
  return total;
}

std::int64_t NegativeSet::size() const {
  return complement_size() + static_cast<std::int64_t>(pairs_.size());
}

bool NegativeSet::in_scope(NodePair p) const {
  return !scope_ || scope_->same_block(p.u, p.v);
}

bool NegativeSet::contains(NodePair p) const {
  if (p.u == p.v) return false;
  p = canonical_pair(p.u, p.v);
  if (std::binary_search(pairs_.begin(), pairs_.end(), p)) return true;
  if (!graph_) return false;
  if (p.u < 0 || p.v >= graph_->num_nodes()) return false;
  return in_scope(p) && !graph_->has_edge(p.u, p.v);
}

void NegativeSet::for_each_in_rows(
    NodeId row_begin, NodeId row_end,
    const std::function<void(NodePair)>& visit) const {
  auto extra = std::lower_bound(pairs_.begin(), pairs_.end(),
                                NodePair{row_begin, -1});
  if (!graph_) {
    for (; extra != pairs_.end() && extra->u < row_end; ++extra) visit(*extra);
    return;
  }
  std::vector<NodeId> row;
  const NodeId n = graph_->num_nodes();
  row_end = std::min(row_end, n);
  for (NodeId u = std::max<NodeId>(row_begin, 0); u < row_end; ++u) {
    row.clear();
    auto nb = graph_->neighbors(u);
    auto it = std::upper_bound(nb.begin(), nb.end(), u);
    auto consider = [&](NodeId v) {
      while (it != nb.end() && *it < v) ++it;
      if (it == nb.end() || *it != v) row.push_back(v);
    };
    if (scope_) {
      const auto& members = scope_->blocks[scope_->assign[u]];
      for (auto m = std::upper_bound(members.begin(), members.end(), u);
           m != members.end(); ++m) {
        consider(*m);
      }
    } else {
      for (NodeId v = u + 1; v < n; ++v) consider(v);
    }
    // Merge with extras of this row.
    std::size_t i = 0;
    while (i < row.size() || (extra != pairs_.end() && extra->u == u)) {
      bool take_extra =
          extra != pairs_.end() && extra->u == u &&
          (i == row.size() || extra->v < row[i]);
      if (take_extra) {
        visit(*extra++);
      } else {
        visit({u, row[i++]});
      }
    }
  }
  for (; extra != pairs_.end() && extra->u < row_end; ++extra) visit(*extra);
}

void NegativeSet::for_each(const std::function<void(NodePair)>& visit) const {
  NodeId n = num_nodes();
  if (!pairs_.empty()) n = std::max(n, pairs_.back().u + 1);
  for_each_in_rows(0, n, visit);
}

std::vector<NodePair> NegativeSet::materialize() const {
  std::vector<NodePair> out;
  out.reserve(static_cast<std::size_t>(size()));
  for_each([&](NodePair p) { out.push_back(p); });
  return out;
}

NodePair NegativeSet::sample_complement(Rng& rng) const {
  const std::int64_t available = complement_size();
  double scope_pairs = scope_ ? (block_pair_cdf_.empty() ? 0.0 : block_pair_cdf_.back())
                              : static_cast<double>(choose2(graph_->num_nodes()));
  if (static_cast<double>(available) >= 0.05 * scope_pairs) {
    // Rejection sampling over the scope's pairs.
    for (;;) {
      NodeId u, v;
      if (scope_) {
        double r = rng.uniform() * scope_pairs;
        auto b = static_cast<int>(
            std::upper_bound(block_pair_cdf_.begin(), block_pair_cdf_.end(), r) -
            block_pair_cdf_.begin());
        b = std::min(b, scope_->k - 1);
        const auto& members = scope_->blocks[b];
        if (members.size() < 2) continue;
        u = members[rng.below(members.size())];
        v = members[rng.below(members.size())];
      } else {
        u = static_cast<NodeId>(rng.below(graph_->num_nodes()));
        v = static_cast<NodeId>(rng.below(graph_->num_nodes()));
      }
      if (u == v || graph_->has_edge(u, v)) continue;
      return canonical_pair(u, v);
    }
  }
  // Nearly complete scope: pick by rank.
  auto target = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(available)));
  std::int64_t index = 0;
  NodePair found{};
  NegativeSet plain = complement(graph_, scope_, {});
  try {
    plain.for_each([&](NodePair p) {
      if (index++ == target) {
        found = p;
        throw 0;
      }
    });
  } catch (int) {
  }
  return found;
}

NodePair NegativeSet::sample(Rng& rng) const {
  const std::int64_t total = size();
  if (total <= 0) throw Error(ErrorCode::kParameter, "sampling from an empty negative set");
  auto r = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(total)));
  if (r < static_cast<std::int64_t>(pairs_.size())) return pairs_[r];
  return sample_complement(rng);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<WeightedEdge> edges_without(const AttributedGraph& g,
                                        std::initializer_list<const std::vector<NodePair>*> remove) {
  std::unordered_set<std::uint64_t> drop;
  for (const auto* list : remove) {
    for (NodePair p : *list) drop.insert(pair_key(p));
  }
  std::vector<WeightedEdge> out;
  for (const auto& e : g.edges()) {
    if (!drop.count(pair_key({e.u, e.v}))) out.push_back(e);
  }
  return out;
}

struct PositiveSplit {
  std::vector<NodePair> train, valid, test;
};

PositiveSplit split_positives(std::vector<NodePair> edges, const SplitRatios& ratios,
                              Rng& rng) {
  rng.shuffle(edges);
  auto sizes = split_sizes(edges.size(), ratios);
  PositiveSplit out;
  out.train.assign(edges.begin(), edges.begin() + sizes[0]);
  out.valid.assign(edges.begin() + sizes[0], edges.begin() + sizes[0] + sizes[1]);
  out.test.assign(edges.begin() + sizes[0] + sizes[1], edges.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.valid.begin(), out.valid.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::vector<NodePair> merged(const std::vector<NodePair>& a,
                             const std::vector<NodePair>& b) {
  std::vector<NodePair> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

void attach_complements(SplitSet& split) {
  split.test_neg = NegativeSet::complement(split.graph, split.partition, {});
  split.valid_neg = NegativeSet::complement(split.graph, split.partition, split.test_pos);
  split.train_neg = NegativeSet::complement(split.graph, split.partition,
                                            merged(split.valid_pos, split.test_pos));
}

std::uint64_t block_split_seed(std::uint64_t seed, int block) {
  return derive_seed(seed, "split.positives", static_cast<std::uint64_t>(block));
}

}  // namespace

std::vector<WeightedEdge> SplitSet::training_structure() const {
  return edges_without(*graph, {&valid_pos, &test_pos});
}

std::vector<WeightedEdge> SplitSet::test_structure() const {
  return edges_without(*graph, {&test_pos});
}

SplitSet unbiased_split(const AttributedGraph& g, const SplitRatios& ratios,
                        std::uint64_t seed) {
  ratios.validate();
  if (g.num_edges() < 20) {
    throw Error(ErrorCode::kParameter,
                "unbiased split needs at least 20 edges, graph has " +
                    std::to_string(g.num_edges()));
  }
  SplitSet split;
  split.regime = SplitRegime::kUnbiased;
  split.ratios = ratios;
  split.seed = seed;
  split.graph = std::make_shared<const AttributedGraph>(g);
  Rng rng(block_split_seed(seed, 0));
  auto pos = split_positives(g.edge_pairs(), ratios, rng);
  split.train_pos = std::move(pos.train);
  split.valid_pos = std::move(pos.valid);
  split.test_pos = std::move(pos.test);
  attach_complements(split);
  return split;
}

SplitSet partitioned_split(const AttributedGraph& g, const Partitioning& part,
                           const SplitRatios& ratios, std::uint64_t seed) {
  ratios.validate();
  if (part.assign.size() != static_cast<std::size_t>(g.num_nodes())) {
    throw Error(ErrorCode::kParameter, "partition does not match the graph");
  }
  SplitSet split;
  split.regime = SplitRegime::kPartitioned;
  split.ratios = ratios;
  split.seed = seed;
  split.graph = std::make_shared<const AttributedGraph>(g);
  split.partition = std::make_shared<const Partitioning>(part);

  std::vector<std::vector<NodePair>> block_edges(part.k);
  for (NodePair e : g.edge_pairs()) {
    if (part.same_block(e.u, e.v)) block_edges[part.assign[e.u]].push_back(e);
  }
  for (int b = 0; b < part.k; ++b) {
    Rng rng(block_split_seed(seed, b));
    auto pos = split_positives(std::move(block_edges[b]), ratios, rng);
    split.train_pos.insert(split.train_pos.end(), pos.train.begin(), pos.train.end());
    split.valid_pos.insert(split.valid_pos.end(), pos.valid.begin(), pos.valid.end());
    split.test_pos.insert(split.test_pos.end(), pos.test.begin(), pos.test.end());
  }
  std::sort(split.train_pos.begin(), split.train_pos.end());
  std::sort(split.valid_pos.begin(), split.valid_pos.end());
  std::sort(split.test_pos.begin(), split.test_pos.end());
  attach_complements(split);
  return split;
}

SplitSet biased_split(const AttributedGraph& g, const SplitRatios& ratios,
                      double neg_per_pos, std::uint64_t seed) {
  if (!(neg_per_pos > 0.0)) {
    throw Error(ErrorCode::kParameter, "neg_per_pos must be positive");
  }
  SplitSet split = unbiased_split(g, ratios, seed);
  split.regime = SplitRegime::kBiased;
  const std::size_t counts[3] = {
      static_cast<std::size_t>(std::llround(neg_per_pos * split.train_pos.size())),
      static_cast<std::size_t>(std::llround(neg_per_pos * split.valid_pos.size())),
      static_cast<std::size_t>(std::llround(neg_per_pos * split.test_pos.size()))};
  const std::size_t total = counts[0] + counts[1] + counts[2];
  NegativeSet pool = NegativeSet::complement(split.graph, nullptr, {});
  if (static_cast<std::int64_t>(total) > pool.size()) {
    throw Error(ErrorCode::kParameter,
                "requested " + std::to_string(total) + " negatives but only " +
                    std::to_string(pool.size()) + " non-edges exist");
  }
  Rng rng(derive_seed(seed, "split.biased_negatives"));
  std::vector<NodePair> drawn;
  drawn.reserve(total);
  if (static_cast<std::int64_t>(total) * 2 > pool.size()) {
    drawn = pool.materialize();
    rng.shuffle(drawn);
    drawn.resize(total);
  } else {
    std::unordered_set<std::uint64_t> seen;
    while (drawn.size() < total) {
      NodePair p = pool.sample(rng);
      if (seen.insert(pair_key(p)).second) drawn.push_back(p);
    }
  }
  auto first = drawn.begin();
  split.train_neg = NegativeSet::listed({first, first + counts[0]});
  first += counts[0];
  split.valid_neg = NegativeSet::listed({first, first + counts[1]});
  first += counts[1];
  split.test_neg = NegativeSet::listed({first, first + counts[2]});
  return split;
}

SplitSet restrict_negatives_to_blocks(const SplitSet& split,
                                      const Partitioning& part) {
  if (!split.train_neg.is_implicit()) {
    throw Error(ErrorCode::kParameter,
                "block restriction needs implicit (unbiased) negative sets");
  }
  SplitSet out = split;
  out.regime = SplitRegime::kPartitioned;
  out.partition = std::make_shared<const Partitioning>(part);
  auto intra = [&](const std::vector<NodePair>& pairs) {
    std::vector<NodePair> kept;
    for (NodePair p : pairs) {
      if (part.same_block(p.u, p.v)) kept.push_back(p);
    }
    return kept;
  };
  out.test_neg = NegativeSet::complement(out.graph, out.partition, {});
  out.valid_neg = NegativeSet::complement(out.graph, out.partition, intra(out.test_pos));
  out.train_neg = NegativeSet::complement(
      out.graph, out.partition, intra(merged(out.valid_pos, out.test_pos)));
  return out;
}

NegativePairCount negative_pair_count(const Partitioning& part,
                                      const AttributedGraph& g) {
  if (part.assign.size() != static_cast<std::size_t>(g.num_nodes())) {
    throw Error(ErrorCode::kParameter, "partition does not match the graph");
  }
  NegativePairCount count;
  for (int b = 0; b < part.k; ++b) {
    const std::int64_t size = part.block_size(b);
    count.squared_form += size * size - part.intra_edges[b];
    count.exact += choose2(size) - part.intra_edges[b];
  }
  return count;
}

std::vector<MaskedBatch> positive_mask_batches(const SplitSet& split,
                                               std::size_t batch_size,
                                               std::uint64_t seed) {
  if (batch_size < 1) throw Error(ErrorCode::kParameter, "batch_size must be >= 1");
  std::vector<NodePair> order = split.train_pos;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<MaskedBatch> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    MaskedBatch b;
    b.positives.assign(order.begin() + i,
                       order.begin() + std::min(order.size(), i + batch_size));
    batches.push_back(std::move(b));
  }
  return batches;
}

std::vector<WeightedEdge> residual_structure(const SplitSet& split,
                                             const MaskedBatch& batch) {
  return edges_without(*split.graph, {&split.valid_pos, &split.test_pos,
                                      &batch.positives});
}

// ---------------------------------------------------------------------------
// Split file I/O.

namespace {

constexpr const char* kSections[6] = {"[train+]", "[train-]", "[valid+]",
                                      "[valid-]", "[test+]",  "[test-]"};

void write_pairs(std::ostream& out, const std::vector<NodePair>& pairs) {
  for (NodePair p : pairs) out << p.u << '\t' << p.v << '\n';
}

}  // namespace

void save_split(const SplitSet& split, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  const std::string stem = path.stem().string();
  const auto dir = path.parent_path();
  const std::string exclude_name = stem + ".exclude.tsv";
  const std::string scope_name = stem + ".scope.tsv";

  bool any_implicit = split.train_neg.is_implicit() || split.valid_neg.is_implicit() ||
                      split.test_neg.is_implicit();
  if (any_implicit) {
    save_edges(*split.graph, dir / exclude_name);
    if (split.partition) save_partition(*split.partition, dir / scope_name);
  }

  out << "# gelato split\n";
  out << "regime\t" << regime_name(split.regime) << '\n';
  out << "seed\t" << split.seed << '\n';
  out << "ratios\t" << format_real(split.ratios.train) << '\t'
      << format_real(split.ratios.valid) << '\t' << format_real(split.ratios.test)
      << '\n';
  out << "nodes\t" << split.num_nodes() << '\n';

  const std::vector<NodePair>* positives[3] = {&split.train_pos, &split.valid_pos,
                                               &split.test_pos};
  const NegativeSet* negatives[3] = {&split.train_neg, &split.valid_neg,
                                     &split.test_neg};
  for (int s = 0; s < 3; ++s) {
    out << kSections[2 * s] << '\n';
    write_pairs(out, *positives[s]);
    out << kSections[2 * s + 1] << '\n';
    if (negatives[s]->is_implicit()) {
      out << "COMPLEMENT exclude=" << exclude_name;
      if (negatives[s]->scope()) out << " scope=" << scope_name;
      out << '\n';
    }
    write_pairs(out, negatives[s]->pairs());
  }
}

SplitSet load_split(const AttributedGraph& g, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const auto dir = path.parent_path();

  SplitSet split;
  split.graph = std::make_shared<const AttributedGraph>(g);
  std::map<std::string, std::shared_ptr<const AttributedGraph>> excluded;
  std::map<std::string, std::shared_ptr<const Partitioning>> scopes;

  std::vector<NodePair> lists[6];
  struct Directive {
    std::string exclude, scope;
  };
  std::optional<Directive> directives[6];
  int section = -1;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    return Error(ErrorCode::kParse,
                 path.string() + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line[0] == '[') {
      section = -1;
      for (int s = 0; s < 6; ++s) {
        if (line == kSections[s]) section = s;
      }
      if (section == -1) throw fail("unknown section " + line);
      continue;
    }
    std::istringstream fields(line);
    std::string head;
    fields >> head;
    if (section == -1) {
      if (head == "regime") {
        std::string name;
        fields >> name;
        split.regime = parse_regime(name);
      } else if (head == "seed") {
        fields >> split.seed;
      } else if (head == "ratios") {
        fields >> split.ratios.train >> split.ratios.valid >> split.ratios.test;
      } else if (head == "nodes") {
        NodeId n = -1;
        fields >> n;
        if (n != g.num_nodes()) throw fail("split was written for another graph");
      } else {
        throw fail("unknown header key " + head);
      }
      continue;
    }
    if (head == "COMPLEMENT") {
      if (section % 2 == 0) throw fail("COMPLEMENT in a positive section");
      Directive d;
      std::string kv;
      while (fields >> kv) {
        if (kv.rfind("exclude=", 0) == 0) {
          d.exclude = kv.substr(8);
        } else if (kv.rfind("scope=", 0) == 0) {
          d.scope = kv.substr(6);
        } else {
          throw fail("unknown COMPLEMENT option " + kv);
        }
      }
      if (d.exclude.empty()) throw fail("COMPLEMENT needs exclude=<file>");
      directives[section] = d;
      continue;
    }
    long long u = -1, v = -1;
    std::istringstream pair_fields(line);
    if (!(pair_fields >> u >> v) || u < 0 || v < 0 || u == v) {
      throw fail("expected a node pair");
    }
    if (u >= g.num_nodes() || v >= g.num_nodes()) throw fail("node outside graph");
    lists[section].push_back(canonical_pair(static_cast<NodeId>(u),
                                            static_cast<NodeId>(v)));
  }

  for (int s = 0; s < 6; ++s) std::sort(lists[s].begin(), lists[s].end());
  split.train_pos = lists[0];
  split.valid_pos = lists[2];
  split.test_pos = lists[4];
  NegativeSet* negatives[3] = {&split.train_neg, &split.valid_neg, &split.test_neg};
  for (int s = 0; s < 3; ++s) {
    const auto& d = directives[2 * s + 1];
    if (!d) {
      *negatives[s] = NegativeSet::listed(lists[2 * s + 1]);
      continue;
    }
    auto& ex = excluded[d->exclude];
    if (!ex) {
      AttributedGraph loaded = load_graph(dir / d->exclude);
      std::vector<WeightedEdge> edges = loaded.edges();
      ex = std::make_shared<const AttributedGraph>(g.with_edges(std::move(edges)));
    }
    std::shared_ptr<const Partitioning> scope;
    if (!d->scope.empty()) {
      auto& sc = scopes[d->scope];
      if (!sc) sc = std::make_shared<const Partitioning>(load_partition(*ex, dir / d->scope));
      scope = sc;
      split.partition = sc;
    }
    split.graph = ex;
    *negatives[s] = NegativeSet::complement(ex, scope, lists[2 * s + 1]);
  }
  return split;
}

}  // namespace gelato
