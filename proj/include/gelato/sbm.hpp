#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gelato/graph.hpp"

namespace gelato {

// Planted partition model: k blocks of n nodes, intra-block edge probability
// p and inter-block probability q. Node u belongs to block u / n.
struct SbmParams {
  int k = 1;
  int n = 2;
  double p = 0.0;
  double q = 0.0;

  void validate() const;
  NodeId num_nodes() const { return static_cast<NodeId>(k) * n; }
  int block_of(NodeId u) const { return static_cast<int>(u / n); }
};

struct SbmAttributeOptions {
  double noise_sigma = 0.1;
};

// Samples every unordered pair independently. With attributes, node u gets
// the one-hot indicator of its block plus isotropic Gaussian noise.
AttributedGraph sample_sbm(const SbmParams& params, std::uint64_t seed,
                           std::optional<SbmAttributeOptions> attributes = std::nullopt);

// Expected pair counts over the whole graph.
struct PairCensus {
  double intra_pos = 0.0;
  double intra_neg = 0.0;
  double inter_pos = 0.0;
  double inter_neg = 0.0;

  double positives() const { return intra_pos + inter_pos; }
  double negatives() const { return intra_neg + inter_neg; }
  double total() const { return positives() + negatives(); }
};

PairCensus pair_census(const SbmParams& params);

// Expected precision of a classifier that predicts links at random, when
// evaluated against every pair (unbiased) or against an equal number of
// sampled negatives (biased).
double random_classifier_precision(const PairCensus& census, bool biased);

enum class ClassifierSpec {
  kPredictNone,         // every disconnected pair is a non-link
  kPredictWithinBlock,  // within-block pairs are links, others non-links
  kPredictAll,          // every pair is a link
};

// Per-node expected confusion counts over the nk - 1 other nodes, using
// standard semantics (TP = predicted link that is a link, etc.).
struct Confusion {
  double tp = 0.0;
  double fp = 0.0;
  double fn = 0.0;
  double tn = 0.0;

  double accuracy() const { return (tp + tn) / (tp + tn + fp + fn); }
};

Confusion expected_confusion(const SbmParams& params, ClassifierSpec spec);

// Expected accuracy when every pair is evaluated.
double expected_accuracy(const SbmParams& params, ClassifierSpec spec);

// Expected accuracy with as many sampled negatives as positives. The
// within-block classifier scores the mean of its accuracy on the two classes.
double biased_expected_accuracy(const SbmParams& params, ClassifierSpec spec);

struct AccuracyComparison {
  SbmParams params;
  double acc_none = 0.0;    // PredictNone
  double acc_within = 0.0;  // PredictWithinBlock
  // "none", "within" or "tie" (|difference| <= 1e-12)
  std::string winner;
};

// p in {0.1, ..., 0.9}, q in {0.01, 0.05, 0.1, ..., 0.8} with q < p,
// k in {2, 5, 10}, n in {100, 1000}.
std::vector<SbmParams> default_accuracy_grid();

std::vector<AccuracyComparison> compare_accuracies(std::span<const SbmParams> grid);

// True when PredictNone wins exactly for p < 0.5, PredictWithinBlock wins for
// p > 0.5, and the two tie at p = 0.5.
bool accuracy_boundary_holds(std::span<const AccuracyComparison> rows);

enum class PairKind { kIntra, kInter };

// Expected t = 1 autocovariance of a pair with degrees d_i, d_j in a graph
// with m edges: (1/2m)(p - d_i d_j / 2m) for intra pairs, q for inter.
double expected_autocov_t1(const SbmParams& params, PairKind kind, double d_i,
                           double d_j, double m);

struct BlockSeparation {
  double intra_mean = 0.0;
  double inter_mean = 0.0;
};

// Mean dense autocovariance over intra-block and inter-block pairs of a
// graph sampled from params.
BlockSeparation autocov_block_separation(const AttributedGraph& g,
                                        const SbmParams& params, int t);

struct DensityStep {
  int k = 1;
  double mean_p_hat = 0.0;        // mean over blocks of |E_i| / C(|V_i|, 2)
  double mean_p_hat_square = 0.0; // mean over blocks of |E_i| / |V_i|^2
  double expected_intra = 0.0;    // t = 1 intra expectation at mean_p_hat
};

struct DensityReport {
  std::vector<DensityStep> steps;
  bool non_decreasing = true;
};

// Partitions g for every k in the (increasing) sequence and tracks how the
// within-block edge density estimate evolves.
DensityReport block_density_trend(const AttributedGraph& g,
                                  const std::vector<int>& k_sequence,
                                  std::uint64_t seed);

}  // namespace gelato
