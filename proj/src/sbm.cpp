#include "gelato/sbm.hpp"

#include <cmath>

#include "gelato/heuristics.hpp"
#include "gelato/partition.hpp"
#include "gelato/random.hpp"

namespace gelato {

void SbmParams::validate() const {
  if (k < 1) throw Error(ErrorCode::kParameter, "SBM needs k >= 1");
  if (n < 2) throw Error(ErrorCode::kParameter, "SBM needs n >= 2");
  if (!(0.0 <= q && q <= p && p <= 1.0)) {
    throw Error(ErrorCode::kParameter, "SBM needs 0 <= q <= p <= 1");
  }
}

AttributedGraph sample_sbm(const SbmParams& params, std::uint64_t seed,
                           std::optional<SbmAttributeOptions> attributes) {
  params.validate();
  const NodeId total = params.num_nodes();
  Rng edge_rng(derive_seed(seed, "sbm.edges"));
  std::vector<WeightedEdge> edges;
  for (NodeId u = 0; u < total; ++u) {
    for (NodeId v = u + 1; v < total; ++v) {
      double prob = params.block_of(u) == params.block_of(v) ? params.p : params.q;
      if (edge_rng.bernoulli(prob)) edges.push_back({u, v, 1.0});
    }
  }
  if (!attributes) return AttributedGraph::from_edges(total, std::move(edges));

  Rng attr_rng(derive_seed(seed, "sbm.attributes"));
  std::vector<double> attrs(static_cast<std::size_t>(total) * params.k);
  for (NodeId u = 0; u < total; ++u) {
    for (int j = 0; j < params.k; ++j) {
      double base = params.block_of(u) == j ? 1.0 : 0.0;
      attrs[static_cast<std::size_t>(u) * params.k + j] =
          base + attributes->noise_sigma * attr_rng.normal();
    }
  }
  return AttributedGraph::from_edges(total, std::move(edges), std::move(attrs),
                                     params.k);
}

PairCensus pair_census(const SbmParams& params) {
  params.validate();
  const double k = params.k, n = params.n;
  const double intra_pairs = k * (n * (n - 1.0) / 2.0);
  const double inter_pairs = k * n * (k - 1.0) * n / 2.0;
  PairCensus c;
  c.intra_pos = intra_pairs * params.p;
  c.intra_neg = intra_pairs * (1.0 - params.p);
  c.inter_pos = inter_pairs * params.q;
  c.inter_neg = inter_pairs * (1.0 - params.q);
  return c;
}

double random_classifier_precision(const PairCensus& census, bool biased) {
  if (biased) return 0.5;
  return census.positives() / census.total();
}

Confusion expected_confusion(const SbmParams& params, ClassifierSpec spec) {
  params.validate();
  const double within = params.n - 1.0;
  const double across = static_cast<double>(params.n) * params.k - params.n;
  const double p = params.p, q = params.q;
  Confusion c;
  switch (spec) {
    case ClassifierSpec::kPredictNone:
      c.fn = within * p + across * q;
      c.tn = within * (1.0 - p) + across * (1.0 - q);
      break;
    case ClassifierSpec::kPredictWithinBlock:
      c.tp = within * p;
      c.fp = within * (1.0 - p);
      c.fn = across * q;
      c.tn = across * (1.0 - q);
      break;
    case ClassifierSpec::kPredictAll:
      c.tp = within * p + across * q;
      c.fp = within * (1.0 - p) + across * (1.0 - q);
      break;
  }
  return c;
}

double expected_accuracy(const SbmParams& params, ClassifierSpec spec) {
  params.validate();
  const double within = params.n - 1.0;
  const double across = static_cast<double>(params.n) * params.k - params.n;
  const double others = static_cast<double>(params.n) * params.k - 1.0;
  const double p = params.p, q = params.q;
  switch (spec) {
    case ClassifierSpec::kPredictNone:
      return (within * (1.0 - p) + across * (1.0 - q)) / others;
    case ClassifierSpec::kPredictWithinBlock:
      return (within * p + across * (1.0 - q)) / others;
    case ClassifierSpec::kPredictAll:
      return (within * p + across * q) / others;
  }
  return 0.0;
}

double biased_expected_accuracy(const SbmParams& params, ClassifierSpec spec) {
  params.validate();
  if (spec != ClassifierSpec::kPredictWithinBlock) return 0.5;
  const double within = params.n - 1.0;
  const double across = static_cast<double>(params.n) * params.k - params.n;
  const double p = params.p, q = params.q;
  const double pos_den = within * p + across * q;
  const double neg_den = across * (1.0 - q) + within * (1.0 - p);
  // Degenerate classes (no positives or no negatives) score as chance.
  const double a1 = pos_den > 0.0 ? within * p / pos_den : 0.5;
  const double a2 = neg_den > 0.0 ? across * (1.0 - q) / neg_den : 0.5;
  return (a1 + a2) / 2.0;
}

std::vector<SbmParams> default_accuracy_grid() {
  std::vector<SbmParams> grid;
  const double qs[] = {0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  for (int pi = 1; pi <= 9; ++pi) {
    const double p = pi / 10.0;
    for (double q : qs) {
      if (!(q < p)) continue;
      for (int k : {2, 5, 10}) {
        for (int n : {100, 1000}) grid.push_back({k, n, p, q});
      }
    }
  }
  return grid;
}

std::vector<AccuracyComparison> compare_accuracies(std::span<const SbmParams> grid) {
  std::vector<AccuracyComparison> rows;
  for (const auto& params : grid) {
    AccuracyComparison row;
    row.params = params;
    row.acc_none = expected_accuracy(params, ClassifierSpec::kPredictNone);
    row.acc_within = expected_accuracy(params, ClassifierSpec::kPredictWithinBlock);
    const double diff = row.acc_none - row.acc_within;
    row.winner = std::abs(diff) <= 1e-12 ? "tie" : (diff > 0.0 ? "none" : "within");
    rows.push_back(row);
  }
  return rows;
}

bool accuracy_boundary_holds(std::span<const AccuracyComparison> rows) {
  for (const auto& row : rows) {
    const double p = row.params.p;
    const std::string expected = std::abs(p - 0.5) <= 1e-12 ? "tie"
                                 : p < 0.5                  ? "none"
                                                            : "within";
    if (row.winner != expected) return false;
  }
  return true;
}

double expected_autocov_t1(const SbmParams& params, PairKind kind, double d_i,
                           double d_j, double m) {
  if (!(m > 0.0)) throw Error(ErrorCode::kParameter, "edge count must be positive");
  const double density = kind == PairKind::kIntra ? params.p : params.q;
  return (density - d_i * d_j / (2.0 * m)) / (2.0 * m);
}

BlockSeparation autocov_block_separation(const AttributedGraph& g,
                                        const SbmParams& params, int t) {
  if (g.num_nodes() != params.num_nodes()) {
    throw Error(ErrorCode::kParameter, "graph does not match the SBM parameters");
  }
  DenseMatrix r = autocovariance_dense(with_isolated_self_loops(g.adjacency()), t);
  double intra = 0.0, inter = 0.0;
  std::int64_t intra_count = 0, inter_count = 0;
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    for (NodeId v = u + 1; v < g.num_nodes(); ++v) {
      if (params.block_of(u) == params.block_of(v)) {
        intra += r(u, v);
        ++intra_count;
      } else {
        inter += r(u, v);
        ++inter_count;
      }
    }
  }
  BlockSeparation out;
  out.intra_mean = intra_count > 0 ? intra / intra_count : 0.0;
  out.inter_mean = inter_count > 0 ? inter / inter_count : 0.0;
  return out;
}

DensityReport block_density_trend(const AttributedGraph& g,
                                  const std::vector<int>& k_sequence,
                                  std::uint64_t seed) {
  for (std::size_t i = 1; i < k_sequence.size(); ++i) {
    if (k_sequence[i] <= k_sequence[i - 1]) {
      throw Error(ErrorCode::kParameter, "k sequence must be increasing");
    }
  }
  const double m = static_cast<double>(g.num_edges());
  const double nodes = g.num_nodes();
  DensityReport report;
  for (int k : k_sequence) {
    Partitioning part = partition(g, k, seed);
    DensityStep step;
    step.k = k;
    int counted = 0;
    for (int b = 0; b < part.k; ++b) {
      const std::int64_t size = part.block_size(b);
      if (size < 2) continue;
      const double e = static_cast<double>(part.intra_edges[b]);
      step.mean_p_hat += e / static_cast<double>(choose2(size));
      step.mean_p_hat_square += e / (static_cast<double>(size) * size);
      ++counted;
    }
    if (counted > 0) {
      step.mean_p_hat /= counted;
      step.mean_p_hat_square /= counted;
    }
    if (m > 0.0) {
      const double mean_degree = 2.0 * m / nodes;
      step.expected_intra =
          (step.mean_p_hat - mean_degree * mean_degree / (2.0 * m)) / (2.0 * m);
    }
    if (!report.steps.empty() &&
        step.mean_p_hat < report.steps.back().mean_p_hat) {
      report.non_decreasing = false;
    }
    report.steps.push_back(step);
  }
  return report;
}

}  // namespace gelato
