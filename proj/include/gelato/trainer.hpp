#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gelato/enhancer.hpp"
#include "gelato/graph.hpp"
#include "gelato/metrics.hpp"
#include "gelato/splits.hpp"

namespace gelato {

enum class LossKind { kNPair, kCrossEntropy };

struct TrainConfig {
  double lr = 0.001;
  double dropout = 0.5;
  int t = 3;
  int epochs = 100;
  std::size_t batch_size = 512;  // training positives per step
  int negatives_per_positive = 50;
  std::uint64_t seed = 0;
  double alpha = 0.5;
  double beta = 0.5;
  double eta = 0.5;
  int hidden = 128;
  EdgeMode mode = EdgeMode::kUndirected;
  LossKind loss = LossKind::kNPair;
  std::size_t score_batch_rows = 256;

  void validate() const;
};

struct ModelState {
  EdgeNetParams net;
  double alpha = 1.0;
  double beta = 0.0;
  double eta = 0.0;
  int t = 3;
  EdgeMode mode = EdgeMode::kUndirected;
  // Attribute-similar pairs added to the training structure.
  std::vector<NodePair> augmented;
  double selection_metric = 0.0;
  int selected_epoch = 0;
};

// Untrained model for the configuration. Augmentation is computed on the
// given structure.
ModelState initial_model(const AttributedGraph& structure, const TrainConfig& config);

// N-pair loss: sum over positives of log(exp(p) + sum_j exp(n_j)) - p.
double npair_loss(std::span<const double> pos,
                  std::span<const std::vector<double>> neg_sets);

// A positive-masked training step: the structure to score on, and for each
// positive its contrast negatives.
struct BatchProblem {
  std::vector<WeightedEdge> structure;
  std::vector<NodePair> positives;
  std::vector<std::vector<NodePair>> negatives;  // aligned with positives
  bool train_mode = true;
  std::uint64_t mask_seed = 0;
};

struct ScoredBatch {
  std::vector<NodePair> pairs;     // positives then every contrast set in order
  std::vector<double> raw;         // autocovariance scores
  std::vector<double> standardized;
  bool standardized_ok = true;     // false when the scores had zero variance
};

// Enhanced graph of the structure under the model (learned weights in train
// or eval mode), with self-loops on isolated nodes.
CsrMatrix enhanced_adjacency(const ModelState& model, const AttributedGraph& g,
                             std::span<const WeightedEdge> structure, bool train_mode,
                             std::uint64_t mask_seed);

ScoredBatch forward_scores(const ModelState& model, const AttributedGraph& g,
                           const BatchProblem& batch);

struct GradientBuffer {
  std::vector<double> grad;  // shaped like model.net.theta
  double loss = 0.0;
  bool valid = true;
};

// Loss of the batch and its exact gradient with respect to the network
// parameters.
GradientBuffer gradient(const ModelState& model, const AttributedGraph& g,
                        const BatchProblem& batch, LossKind loss = LossKind::kNPair);

// Loss only, for finite-difference checks.
double batch_loss(const ModelState& model, const AttributedGraph& g,
                  const BatchProblem& batch, LossKind loss = LossKind::kNPair);

struct AdamState {
  std::vector<double> m, v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard bias-corrected Adam. Invalid buffers leave everything untouched.
void adam_step(std::vector<double>& params, const GradientBuffer& grads,
               AdamState& state, double lr);

// Raw scores of the split's positives and negatives on a structure, in eval
// mode. Negatives are enumerated in row order.
struct EvalScores {
  std::vector<double> pos;
  std::vector<double> neg;
};
EvalScores score_split(const ModelState& model, const AttributedGraph& g,
                       std::span<const WeightedEdge> structure,
                       std::span<const NodePair> positives, const NegativeSet& negatives,
                       std::size_t batch_rows = 256);

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double val_prec = 0.0;
};

struct TrainResult {
  ModelState model;
  std::vector<EpochRecord> history;
};

TrainResult train(const AttributedGraph& g, const SplitSet& split,
                  const TrainConfig& config);

// Test-set scores on train + valid structure.
EvalScores score_test(const ModelState& model, const SplitSet& split,
                      std::size_t batch_rows = 256);

struct GridPoint {
  double alpha, beta, eta;
};
std::vector<GridPoint> default_grid();

struct GridResult {
  GridPoint best{};
  TrainResult result;
  std::vector<std::pair<GridPoint, double>> scores;  // validation metric per point
};

// Fresh train call per grid point; keeps the best validation prec@100%.
GridResult grid_search(const AttributedGraph& g, const SplitSet& split,
                       const TrainConfig& base, std::span<const GridPoint> grid);

void save_model(const ModelState& model, const std::filesystem::path& path);
ModelState load_model(const std::filesystem::path& path);
void save_history(std::span<const EpochRecord> history,
                  const std::filesystem::path& path);

}  // namespace gelato
