// Acceptance gate: one PASS/FAIL line per criterion.
//
//   gelato_acceptance            run every criterion
//   gelato_acceptance 3 5        run only criteria 3 and 5

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gelato/heuristics.hpp"
#include "gelato/metrics.hpp"
#include "gelato/partition.hpp"
#include "gelato/sbm.hpp"
#include "gelato/splits.hpp"
#include "gelato/trainer.hpp"
#include "gradcheck.hpp"
#include "support.hpp"

using namespace gelato;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit;  // seconds, 0 for none
  std::function<Outcome()> run;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

Outcome inflation() {
  auto r = inflation_demo();
  const bool ok = std::abs(r.biased.auc - 0.99) <= 0.005 && std::abs(r.biased.ap - 0.95) <= 0.02 &&
                  r.unbiased.ap <= 0.10;
  return {ok, fmt("biased AUC %.5f AP %.4f; unbiased AP %.4f, prec@full-recall %.4f",
                  r.biased.auc, r.biased.ap, r.unbiased.ap, r.unbiased.precision_at_full_recall)};
}

Outcome census() {
  SbmParams params{10, 1000, 0.9, 0.1};
  auto c = pair_census(params);
  // Approximate counting treats each block as n^2 / 2 pairs.
  const double approx_intra = params.k * 0.5 * params.n * params.n * (1 - params.p);
  const double biased = random_classifier_precision(c, true);
  const double unbiased = random_classifier_precision(c, false);
  const bool ok = c.inter_neg == 40.5e6 && std::abs(c.intra_neg - approx_intra) / approx_intra <= 0.005 &&
                  biased == 0.5 && unbiased < 0.22;
  return {ok, fmt("inter- %.0f, intra- %.0f (approx %.0f), random precision biased %.2f unbiased %.4f",
                  c.inter_neg, c.intra_neg, approx_intra, biased, unbiased)};
}

Outcome theorem1() {
  auto grid = default_accuracy_grid();
  auto rows = compare_accuracies(grid);
  double worst_tie = 0.0;
  int ties = 0;
  for (const auto& row : rows) {
    if (std::abs(row.params.p - 0.5) < 1e-12) {
      worst_tie = std::max(worst_tie, std::abs(row.acc_none - row.acc_within));
      ++ties;
    }
  }
  const bool ok = accuracy_boundary_holds(rows) && ties > 0 && worst_tie <= 1e-12;
  return {ok, fmt("%zu grid points, %d at p=0.5 with max |diff| %.2e", rows.size(), ties, worst_tie)};
}

Outcome lemma1() {
  SbmParams params{4, 50, 0.3, 0.05};
  int wins1 = 0, wins3 = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto g = sample_sbm(params, seed);
    auto s1 = autocov_block_separation(g, params, 1);
    wins1 += s1.intra_mean > s1.inter_mean;
    auto s3 = autocov_block_separation(g, params, 3);
    wins3 += s3.intra_mean > s3.inter_mean;
  }
  double worst = 0.0;
  for (double m : {100.0, 735.0, 4096.0}) {
    for (double d : {1.0, 7.5, 30.0}) {
      const double gap = expected_autocov_t1(params, PairKind::kIntra, d, d, m) -
                         expected_autocov_t1(params, PairKind::kInter, d, d, m);
      const double exact = (params.p - params.q) / (2 * m);
      worst = std::max(worst, std::abs(gap - exact) / exact);
    }
  }
  const bool ok = wins1 >= 95 && wins3 >= 95 && worst <= 1e-12;
  return {ok, fmt("intra > inter in %d/100 (t=1), %d/100 (t=3); closed form rel err %.1e", wins1,
                  wins3, worst)};
}

Outcome dense_batched() {
  Rng rng(505);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const NodeId n = 2 + static_cast<NodeId>(rng.below(199));
    const int t = static_cast<int>(rng.below(6));
    auto g = testing::random_graph(rng, n, 2.0 * rng.uniform() * 8.0 / n, 0, trial % 2 == 0);
    auto a = with_isolated_self_loops(g.adjacency());
    auto dense = autocovariance_dense(a, t);
    // Random decomposition of the rows into batches.
    std::vector<NodeId> order(n);
    for (NodeId u = 0; u < n; ++u) order[u] = u;
    rng.shuffle(order);
    std::size_t begin = 0;
    while (begin < order.size()) {
      const std::size_t size = 1 + rng.below(std::min<std::size_t>(order.size() - begin, 64));
      std::vector<NodeId> batch(order.begin() + begin, order.begin() + begin + size);
      auto block = autocovariance_batched(a, t, batch);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        for (NodeId v = 0; v < n; ++v) {
          worst = std::max(worst, std::abs(block.scores(i, v) - dense(batch[i], v)));
        }
      }
      begin += size;
    }
  }
  return {worst <= 1e-10, fmt("50 graphs, max |batched - dense| = %.2e", worst)};
}

Outcome gradient_oracle() {
  double worst = 0.0;
  int checked = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    Rng rng(seed);
    auto g = testing::random_connected_graph(rng, 30, 0.15, 4);
    TrainConfig cfg;
    cfg.alpha = 0.3;
    cfg.beta = 0.7;
    cfg.eta = 0.5;
    cfg.t = 3;
    cfg.seed = seed;
    auto model = initial_model(g, cfg);
    BatchProblem batch;
    auto edges = g.edges();
    rng.shuffle(edges);
    for (int i = 0; i < 8; ++i) batch.positives.push_back({edges[i].u, edges[i].v});
    batch.structure.assign(edges.begin() + 8, edges.end());
    for (int i = 0; i < 8; ++i) {
      std::vector<NodePair> set;
      while (set.size() < 5) {
        NodeId u = static_cast<NodeId>(rng.below(30)), v = static_cast<NodeId>(rng.below(30));
        if (u != v && !g.has_edge(u, v)) set.push_back(canonical_pair(u, v));
      }
      batch.negatives.push_back(set);
    }
    batch.mask_seed = 99 + seed;
    auto buffer = gradient(model, g, batch);
    Rng pick(seed + 1000);
    auto results = testing::finite_difference_check(model, g, batch, buffer.grad, 20, 1e-4, pick);
    checked += static_cast<int>(results.size());
    for (const auto& r : results) worst = std::max(worst, r.rel_error);
  }
  return {checked == 60 && worst < 1e-4,
          fmt("%d coordinates over 3 seeds, max relative error %.2e", checked, worst)};
}

Outcome modularity_link() {
  Rng rng(707);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    auto g = testing::random_connected_graph(rng, 10 + static_cast<NodeId>(rng.below(60)), 0.1, 0,
                                             trial % 2 == 0);
    auto r = autocovariance_dense(g.adjacency(), 1);
    const auto& d = g.degrees().d;
    const double vol = g.degrees().vol;
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
      for (NodeId v = 0; v < g.num_nodes(); ++v) {
        const double expected = (g.weight(u, v) - d[u] * d[v] / vol) / vol;
        worst = std::max(worst, std::abs(r(u, v) - expected));
      }
    }
  }
  auto triangles = AttributedGraph::from_edges(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}});
  const double q = modularity(triangles, make_partitioning(triangles, {0, 0, 0, 1, 1, 1}, 2));
  return {worst <= 1e-12 && q == 0.5,
          fmt("max entry error %.2e on 20 graphs; two-triangle modularity %.17g", worst, q)};
}

// Attributed SBM benchmark shared by the ablation and partitioning criteria.
const SbmParams kBench{4, 50, 0.3, 0.02};

AttributedGraph bench_graph(std::uint64_t seed) {
  return sample_sbm(kBench, seed, SbmAttributeOptions{0.1});
}

TrainConfig bench_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.seed = seed;
  return cfg;
}

double test_hits(const ModelState& model, const SplitSet& split) {
  auto scores = score_test(model, split);
  const std::size_t k = scores.neg.size() / 10;
  return hits_at_k(scores.pos, scores.neg, k);
}

Outcome ablation() {
  std::vector<GridPoint> grid;
  for (double eta : {0.0, 0.5}) {
    for (double alpha : {0.25, 0.5, 0.75}) {
      for (double beta : {0.5, 1.0}) grid.push_back({alpha, beta, eta});
    }
  }
  int wins = 0;
  std::ostringstream rows;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto g = bench_graph(seed);
    auto split = unbiased_split(g, {}, seed);
    auto best = grid_search(g, split, bench_config(seed), grid);
    const double trained = test_hits(best.result.model, split);
    TrainConfig base = bench_config(seed);
    base.alpha = 1.0;
    base.beta = 0.0;
    base.eta = 0.0;
    const double baseline =
        test_hits(initial_model(g.with_edges(split.training_structure()), base), split);
    wins += trained >= baseline;
    rows << fmt(" %.3f/%.3f", trained, baseline);
  }
  return {wins >= 8, fmt("trained >= baseline in %d/10 seeds (trained/baseline:%s)", wins,
                         rows.str().c_str())};
}

Outcome partitioned_economy() {
  // Descriptor size and strict saving on random graphs with a nontrivial cut.
  Rng rng(909);
  int graphs = 0;
  bool sizes_ok = true;
  for (int trial = 0; trial < 30; ++trial) {
    auto g = testing::random_graph(rng, 40 + static_cast<NodeId>(rng.below(200)), 0.08);
    const int k = 2 + static_cast<int>(rng.below(7));
    auto part = partition(g, k, trial);
    if (edge_cut(g, part.assign) == 0.0 || g.num_edges() < 20) continue;
    auto split = partitioned_split(g, part, {}, trial);
    std::int64_t expected = 0;
    for (int b = 0; b < k; ++b) expected += choose2(part.block_size(b)) - part.intra_edges[b];
    const std::int64_t unbiased =
        choose2(g.num_nodes()) - static_cast<std::int64_t>(g.num_edges());
    sizes_ok = sizes_ok && split.test_neg.size() == expected &&
               negative_pair_count(part, g).exact == expected && expected < unbiased;
    ++graphs;
  }

  int close = 0;
  std::ostringstream rows;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto g = bench_graph(seed);
    auto split = unbiased_split(g, {}, seed);
    auto part = partition(g.with_edges(split.training_structure()), kBench.k, seed);
    auto scoped = restrict_negatives_to_blocks(split, part);
    const double full = test_hits(train(g, split, bench_config(seed)).model, split);
    const double blocked = test_hits(train(g, scoped, bench_config(seed)).model, split);
    const bool within = std::abs(blocked - full) <= 0.10 * full;
    close += within;
    rows << fmt(" %.3f/%.3f", blocked, full);
  }
  return {sizes_ok && graphs >= 10 && close >= 7,
          fmt("descriptor sizes exact on %d graphs: %s; hits within 10%% in %d/10 seeds "
              "(partitioned/unbiased:%s)",
              graphs, sizes_ok ? "yes" : "no", close, rows.str().c_str())};
}

Outcome split_integrity() {
  Rng rng(1010);
  int graphs = 0, failures = 0;
  while (graphs < 100) {
    const NodeId n = 10 + static_cast<NodeId>(rng.below(291));
    auto g = testing::random_graph(rng, n, std::min(1.0, (2.0 + 10.0 * rng.uniform()) / n));
    if (g.num_edges() < 20) continue;
    ++graphs;
    auto split = unbiased_split(g, {}, graphs);
    std::vector<NodePair> non_edges;
    for (NodeId u = 0; u < n; ++u) {
      for (NodeId v = u + 1; v < n; ++v) {
        if (!g.has_edge(u, v)) non_edges.push_back({u, v});
      }
    }
    bool ok = split.test_neg.materialize() == non_edges;
    auto with = [&](std::vector<NodePair> extra) {
      extra.insert(extra.end(), non_edges.begin(), non_edges.end());
      std::sort(extra.begin(), extra.end());
      return extra;
    };
    ok = ok && split.valid_neg.materialize() == with(split.test_pos);
    auto held = split.valid_pos;
    held.insert(held.end(), split.test_pos.begin(), split.test_pos.end());
    ok = ok && split.train_neg.materialize() == with(held);

    std::set<NodePair> test(split.test_pos.begin(), split.test_pos.end());
    std::set<NodePair> valid(split.valid_pos.begin(), split.valid_pos.end());
    for (const auto& e : split.training_structure()) {
      ok = ok && !test.count({e.u, e.v}) && !valid.count({e.u, e.v});
    }
    std::vector<NodePair> covered;
    for (const auto& batch : positive_mask_batches(split, 1 + rng.below(64), graphs)) {
      covered.insert(covered.end(), batch.positives.begin(), batch.positives.end());
      for (const auto& e : residual_structure(split, batch)) ok = ok && !test.count({e.u, e.v});
    }
    std::sort(covered.begin(), covered.end());
    ok = ok && covered == split.train_pos;
    failures += !ok;
  }
  return {failures == 0, fmt("%d graphs, %d with a violation", graphs, failures)};
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<Criterion> criteria = {
      {1, "inflation under biased testing", 1.0, inflation},
      {2, "SBM pair census", 1.0, census},
      {3, "accuracy boundary at p = 1/2", 1.0, theorem1},
      {4, "intra-block autocovariance dominance", 60.0, lemma1},
      {5, "dense/batched autocovariance equivalence", 60.0, dense_batched},
      {6, "reverse-mode gradient vs finite differences", 60.0, gradient_oracle},
      {7, "modularity/autocovariance link", 0.0, modularity_link},
      {8, "trained model vs untrained autocovariance", 600.0, ablation},
      {9, "partitioned vs unbiased negatives", 0.0, partitioned_economy},
      {10, "split integrity", 0.0, split_integrity},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.time_limit <= 0.0 || secs < c.time_limit;
    const bool pass = out.pass && in_time;
    failed += !pass;
    std::printf("%s [%d] %s: %s (%.2fs%s)\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                out.detail.c_str(), secs,
                in_time ? "" : fmt(", limit %.0fs", c.time_limit).c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
