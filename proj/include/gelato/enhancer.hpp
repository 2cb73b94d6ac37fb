#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gelato/graph.hpp"

namespace gelato {

inline constexpr double kWeightFloor = 1e-6;

// Top round(eta * m) non-adjacent pairs by attribute cosine similarity, ties
// broken by ascending canonical pair. Pairs touching a zero attribute row are
// never candidates. Returned in ascending pair order.
std::vector<NodePair> augmentation_pairs(const AttributedGraph& g, double eta);

// E plus the augmentation pairs, ascending.
std::vector<NodePair> augment(const AttributedGraph& g, double eta);

enum class EdgeMode { kUndirected, kDirected };

// One-hidden-layer network producing the learned edge weight. theta holds,
// in order: W1 (hidden x input_dim, row-major), b1 (hidden), w2 (hidden), b2.
struct EdgeNetParams {
  int input_dim = 0;
  int hidden = 128;
  double dropout = 0.5;
  std::vector<double> theta;

  std::size_t size() const { return theta.size(); }
  std::size_t b1_offset() const {
    return static_cast<std::size_t>(hidden) * input_dim;
  }
  std::size_t w2_offset() const { return b1_offset() + hidden; }
  std::size_t b2_offset() const { return w2_offset() + hidden; }

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias.
  static EdgeNetParams initialize(int attr_dim, int hidden, double dropout,
                                  std::uint64_t seed);
  static EdgeNetParams zeros(int attr_dim, int hidden, double dropout);
};

// Network input for the pair: [x_u + x_v; |x_u - x_v|] (undirected) or
// [x_u; x_v] (directed).
std::vector<double> edge_input(std::span<const double> x_u,
                               std::span<const double> x_v, EdgeMode mode);

// Intermediate values kept for the backward pass.
struct EdgeNetTrace {
  std::vector<double> input;
  std::vector<double> hidden;  // after rectifier and dropout
  std::vector<double> mask;    // dropout scale per hidden unit (0 or 1/(1-p))
  double logit = 0.0;
  double output = 0.0;
};

// Sigmoid output of the network. Dropout is applied only in train_mode, with
// a mask drawn from mask_seed.
double edge_forward(const EdgeNetParams& params, std::span<const double> input,
                    bool train_mode, std::uint64_t mask_seed,
                    EdgeNetTrace* trace = nullptr);

// Adds d_output * d(output)/d(theta) into grad.
void edge_backward(const EdgeNetParams& params, const EdgeNetTrace& trace,
                   double d_output, std::span<double> grad);

double edge_weight(const EdgeNetParams& params, std::span<const double> x_u,
                   std::span<const double> x_v, EdgeMode mode, bool train_mode,
                   std::uint64_t seed);

// Per-pair dropout seed, independent of the pair's orientation.
std::uint64_t pair_mask_seed(std::uint64_t seed, NodePair pair);

struct EnhancedPair {
  NodePair pair;
  double a = 0.0;         // topological weight (0 for augmented pairs)
  double s = 0.0;         // attribute cosine similarity
  double w = 0.0;         // learned weight
  double combined = 0.0;  // max(kappa, raw)
  bool clamped = false;   // raw value was below kappa
};

struct EnhancedGraph {
  NodeId n = 0;
  double alpha = 1.0;
  double beta = 0.0;
  double eta = 0.0;
  double kappa = kWeightFloor;
  std::vector<EnhancedPair> pairs;  // ascending canonical order

  // Symmetric matrix of combined weights.
  CsrMatrix adjacency() const;
};

// Applies alpha*A + (1-alpha)*(beta*w + (1-beta)*s) to every pair, clamped
// from below at kappa. weights is aligned with pairs. Without attributes the
// combination falls back to alpha = 1.
EnhancedGraph combine(const AttributedGraph& g, std::span<const NodePair> pairs,
                      std::span<const double> weights, double alpha, double beta,
                      double kappa = kWeightFloor);

// Same, with the topological weight of each pair given explicitly (used when
// scoring on a structure that differs from g's edges). g supplies attributes.
EnhancedGraph combine_with_topology(const AttributedGraph& g,
                                    std::span<const NodePair> pairs,
                                    std::span<const double> topology,
                                    std::span<const double> weights, double alpha,
                                    double beta, double kappa = kWeightFloor);

// "u v A s w combined" per line, one line per orientation.
void save_enhanced(const EnhancedGraph& eg, const std::filesystem::path& path);

}  // namespace gelato
