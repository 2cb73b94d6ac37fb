#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gelato/graph.hpp"

namespace gelato {

// Node-to-block assignment plus the per-block inventories used by
// partition-scoped negative sampling.
struct Partitioning {
  int k = 1;
  std::vector<int> assign;
  std::vector<std::vector<NodeId>> blocks;
  // Number of edges with both endpoints in block i.
  std::vector<std::int64_t> intra_edges;

  std::int64_t block_size(int b) const {
    return static_cast<std::int64_t>(blocks[b].size());
  }
  bool same_block(NodeId u, NodeId v) const { return assign[u] == assign[v]; }
};

// Fills blocks and intra_edges from an assignment. Throws kParameter when an
// id is outside [0, k) or the size does not match the graph.
Partitioning make_partitioning(const AttributedGraph& g, std::vector<int> assign,
                               int k);

struct PartitionOptions {
  double imbalance = 0.05;  // max block size is ceil((1 + imbalance) n / k)
  int min_coarse_nodes = 64;
  int initial_tries = 4;
  int refine_passes = 10;
  // Non-improving moves tolerated in one refinement pass before rollback.
  int max_stall_moves = 50;
};

std::int64_t max_block_size(NodeId n, int k, double imbalance);

// Multilevel k-way partitioning: heavy-edge matching, greedy graph growing,
// then projection with boundary refinement at every level.
Partitioning partition(const AttributedGraph& g, int k, std::uint64_t seed,
                       const PartitionOptions& options = {});

// Greedy boundary refinement on the fine graph. The cut never increases and a
// balanced input stays balanced.
void refine_partition(const AttributedGraph& g, std::vector<int>& assign, int k,
                      const PartitionOptions& options = {});

// Total weight of edges whose endpoints lie in different blocks.
double edge_cut(const AttributedGraph& g, std::span<const int> assign);

// k-way modularity (1/vol) sum_ij (A_ij - d_i d_j / vol) [c_i == c_j].
double modularity(const AttributedGraph& g, const Partitioning& part);

// Two-way form with s_i in {+1, -1}: (1/2vol) sum_ij (A_ij - d_i d_j/vol) s_i s_j.
double modularity_two_way(const AttributedGraph& g, std::span<const int> signs);

// "node_id<TAB>block_id" per line.
void save_partition(const Partitioning& part, const std::filesystem::path& path);
Partitioning load_partition(const AttributedGraph& g,
                            const std::filesystem::path& path);

}  // namespace gelato
