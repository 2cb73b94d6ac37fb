#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gelato {

// Ties are resolved against positives everywhere: a negative with the same
// score as a positive ranks ahead of it.

// Fraction of positives scoring strictly above the k-th largest negative.
double hits_at_k(std::span<const double> pos, std::span<const double> neg,
                 std::size_t k);

struct MetricValue {
  std::string metric;
  std::int64_t k = 0;  // 0 when the metric takes no cutoff
  double value = 0.0;
};

struct MetricsReport {
  std::string regime;
  std::size_t num_pos = 0;
  std::size_t num_neg = 0;
  std::vector<MetricValue> values;

  // Throws kParameter when the (metric, k) entry is missing.
  double get(const std::string& metric, std::int64_t k = 0) const;
};

// prec@k for every k in k_list, prec@100% (k = |pos|), AP, MRR, AUC and
// hits@k for every k <= |neg|.
MetricsReport rank_metrics(std::span<const double> pos,
                           std::span<const double> neg,
                           std::span<const std::int64_t> k_list);

// Precision among the top k of the merged ranking.
double precision_at_k(std::span<const double> pos, std::span<const double> neg,
                      std::size_t k);

// Mean over positives of the precision at that positive's rank.
double average_precision(std::span<const double> pos, std::span<const double> neg);

// Mean over positives of 1 / (1 + #negatives scoring >= it).
double mean_reciprocal_rank(std::span<const double> pos,
                            std::span<const double> neg);

struct RocPoint {
  double threshold, fpr, tpr;
};
struct PrPoint {
  double threshold, recall, precision;
};

struct CurveResult {
  double auc = 0.0;
  double ap = 0.0;
  std::vector<RocPoint> roc;
  std::vector<PrPoint> pr;
};

// AUC = P(pos > neg) + 0.5 P(pos == neg), computed by sorting. Curves have one
// point per distinct threshold, descending.
CurveResult auc_and_curves(std::span<const double> pos, std::span<const double> neg);

// Scores carrying a (possibly fractional) multiplicity, used to evaluate
// distributions given only as score masses.
struct WeightedScore {
  double score;
  double count;
};

struct WeightedMetrics {
  double auc = 0.0;
  double ap = 0.0;
  double precision_at_full_recall = 0.0;
};

// Same conventions as the unweighted metrics: positives inside a tied group
// are ranked after every tied negative, and each of the c positives in a
// group contributes its own precision.
WeightedMetrics weighted_metrics(std::span<const WeightedScore> pos,
                                 std::span<const WeightedScore> neg);

struct InflationReport {
  WeightedMetrics biased;
  WeightedMetrics unbiased;
};

// Positives all score 0.5. Negatives: high_neg at 1.0 and low_neg at 0.0.
// The biased evaluation keeps sampled_neg negatives uniformly, counted at
// their expected composition.
InflationReport inflation_demo(double positives = 1e5, double high_neg = 1e6,
                               double low_neg = 98.9e6, double sampled_neg = 1e5);

void save_report(const MetricsReport& report, const std::filesystem::path& path);
MetricsReport load_report(const std::filesystem::path& path);
void save_roc(std::span<const RocPoint> points, const std::filesystem::path& path);
void save_pr(std::span<const PrPoint> points, const std::filesystem::path& path);

}  // namespace gelato
