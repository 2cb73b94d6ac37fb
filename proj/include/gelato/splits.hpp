#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string_view>
#include <vector>

#include "gelato/graph.hpp"
#include "gelato/partition.hpp"
#include "gelato/random.hpp"

namespace gelato {

enum class SplitRegime { kUnbiased, kBiased, kPartitioned };

const char* regime_name(SplitRegime regime);
SplitRegime parse_regime(std::string_view name);

struct SplitRatios {
  double train = 0.85;
  double valid = 0.05;
  double test = 0.10;

  void validate() const;
};

// Sizes for `count` items under the ratios, largest-remainder rounding.
std::array<std::size_t, 3> split_sizes(std::size_t count, const SplitRatios& ratios);

// A set of negative pairs. Either an explicit list, or an implicit
// descriptor: every non-adjacent pair of `graph` (optionally only pairs
// inside one block of `scope`) plus a list of extra pairs. Implicit sets are
// never materialized unless asked.
class NegativeSet {
 public:
  NegativeSet() = default;

  static NegativeSet listed(std::vector<NodePair> pairs);
  static NegativeSet complement(std::shared_ptr<const AttributedGraph> graph,
                                std::shared_ptr<const Partitioning> scope,
                                std::vector<NodePair> extras);

  bool is_implicit() const { return graph_ != nullptr; }
  std::int64_t size() const;
  // Non-adjacent pairs covered by the descriptor (0 for listed sets).
  std::int64_t complement_size() const;
  bool contains(NodePair p) const;

  // Listed pairs, or the extras of an implicit set. Sorted canonically.
  const std::vector<NodePair>& pairs() const { return pairs_; }
  const std::shared_ptr<const Partitioning>& scope() const { return scope_; }

  // Visits pairs with first endpoint in [row_begin, row_end), ascending.
  void for_each_in_rows(NodeId row_begin, NodeId row_end,
                        const std::function<void(NodePair)>& visit) const;
  void for_each(const std::function<void(NodePair)>& visit) const;
  std::vector<NodePair> materialize() const;

  // Uniform draw from the set. Throws kParameter when empty.
  NodePair sample(Rng& rng) const;

 private:
  bool in_scope(NodePair p) const;
  NodePair sample_complement(Rng& rng) const;
  NodeId num_nodes() const;

  std::vector<NodePair> pairs_;
  std::shared_ptr<const AttributedGraph> graph_;
  std::shared_ptr<const Partitioning> scope_;
  std::vector<double> block_pair_cdf_;
};

struct SplitSet {
  SplitRegime regime = SplitRegime::kUnbiased;
  SplitRatios ratios;
  std::uint64_t seed = 0;
  std::shared_ptr<const AttributedGraph> graph;
  std::shared_ptr<const Partitioning> partition;  // set when negatives are block-scoped

  std::vector<NodePair> train_pos, valid_pos, test_pos;
  NegativeSet train_neg, valid_neg, test_neg;

  NodeId num_nodes() const { return graph->num_nodes(); }

  // Edges of the graph minus validation and test positives.
  std::vector<WeightedEdge> training_structure() const;
  // Edges of the graph minus test positives.
  std::vector<WeightedEdge> test_structure() const;
};

SplitSet unbiased_split(const AttributedGraph& g, const SplitRatios& ratios,
                        std::uint64_t seed);

// Unbiased split repeated inside each block; inter-block pairs appear in no
// positive or negative set.
SplitSet partitioned_split(const AttributedGraph& g, const Partitioning& part,
                           const SplitRatios& ratios, std::uint64_t seed);

// Positives as unbiased_split; negatives sampled uniformly without
// replacement from the non-edges, round(neg_per_pos * |positives|) per split.
SplitSet biased_split(const AttributedGraph& g, const SplitRatios& ratios,
                      double neg_per_pos, std::uint64_t seed);

// Same positives, every negative set restricted to intra-block pairs.
SplitSet restrict_negatives_to_blocks(const SplitSet& split,
                                      const Partitioning& part);

struct NegativePairCount {
  std::int64_t squared_form = 0;  // sum_i |V_i|^2 - |E_i|
  std::int64_t exact = 0;         // sum_i C(|V_i|, 2) - |E_i|
};

NegativePairCount negative_pair_count(const Partitioning& part,
                                      const AttributedGraph& g);

struct MaskedBatch {
  std::vector<NodePair> positives;
};

// Shuffled training positives in chunks of batch_size.
std::vector<MaskedBatch> positive_mask_batches(const SplitSet& split,
                                               std::size_t batch_size,
                                               std::uint64_t seed);

// Training structure with the batch's own positives removed.
std::vector<WeightedEdge> residual_structure(const SplitSet& split,
                                             const MaskedBatch& batch);

// Sectioned text file. Implicit negative sets are written as a COMPLEMENT
// directive that references sibling files holding the graph's edges (and the
// block assignment when scoped).
void save_split(const SplitSet& split, const std::filesystem::path& path);
SplitSet load_split(const AttributedGraph& g, const std::filesystem::path& path);

}  // namespace gelato
