#include <cmath>

#include "doctest.h"
#include "gelato/heuristics.hpp"
#include "gelato/parallel.hpp"
#include "support.hpp"

using namespace gelato;

TEST_CASE("triangle at t=1 gives 1/18 off the diagonal") {
  auto g = AttributedGraph::from_edges(3, {{0, 1}, {1, 2}, {0, 2}});
  auto r = autocovariance_dense(g.adjacency(), 1);
  CHECK(r(0, 1) == doctest::Approx(1.0 / 18.0));
  CHECK(r(0, 0) == doctest::Approx(-1.0 / 9.0));
}

TEST_CASE("path a-b-c at t=2") {
  auto g = AttributedGraph::from_edges(3, {{0, 1}, {1, 2}});
  auto r = autocovariance_dense(g.adjacency(), 2);
  CHECK(r(0, 2) == doctest::Approx(1.0 / 16.0));
  CHECK(r(2, 0) == doctest::Approx(1.0 / 16.0));
}

TEST_CASE("dense autocovariance matches the reference and is symmetric") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const NodeId n = 5 + static_cast<NodeId>(rng.below(40));
    const int t = static_cast<int>(rng.below(6));
    auto g = testing::random_connected_graph(rng, n, 0.2, 0, trial % 2 == 0);
    auto r = autocovariance_dense(g.adjacency(), t);
    auto ref = testing::reference_autocov(testing::to_dense(g.adjacency()), t);
    for (NodeId u = 0; u < n; ++u) {
      for (NodeId v = 0; v < n; ++v) {
        CHECK(std::abs(r(u, v) - ref[u][v]) < 1e-12);
        CHECK(std::abs(r(u, v) - r(v, u)) < 1e-12);
      }
    }
  }
}

TEST_CASE("t=1 autocovariance is the modularity matrix over vol") {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    auto g = testing::random_connected_graph(rng, 25, 0.2, 0, true);
    auto r = autocovariance_dense(g.adjacency(), 1);
    const auto& d = g.degrees().d;
    const double vol = g.degrees().vol;
    for (NodeId u = 0; u < 25; ++u) {
      for (NodeId v = 0; v < 25; ++v) {
        CHECK(std::abs(r(u, v) - (g.weight(u, v) - d[u] * d[v] / vol) / vol) < 1e-12);
      }
    }
  }
}

TEST_CASE("batched rows equal dense rows for any batch") {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const NodeId n = 10 + static_cast<NodeId>(rng.below(80));
    const int t = 1 + static_cast<int>(rng.below(5));
    auto g = testing::random_connected_graph(rng, n, 0.1);
    auto dense = autocovariance_dense(g.adjacency(), t);
    std::vector<NodeId> batch;
    for (NodeId u = 0; u < n; ++u) {
      if (rng.bernoulli(0.3)) batch.push_back(u);
    }
    if (batch.empty()) batch.push_back(0);
    rng.shuffle(batch);
    auto block = autocovariance_batched(g.adjacency(), t, batch);
    CHECK(block.rows == batch);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      for (NodeId v = 0; v < n; ++v) {
        CHECK(std::abs(block.scores(i, v) - dense(batch[i], v)) < 1e-10);
      }
    }
  }
}

TEST_CASE("pair scores do not depend on batch size or thread count") {
  Rng rng(10);
  auto g = testing::random_connected_graph(rng, 60, 0.1);
  std::vector<NodePair> pairs;
  for (int i = 0; i < 200; ++i) {
    NodeId u = static_cast<NodeId>(rng.below(60)), v = static_cast<NodeId>(rng.below(60));
    if (u != v) pairs.push_back(canonical_pair(u, v));
  }
  auto base = autocovariance_scores(g.adjacency(), 3, pairs, 256);
  auto dense = autocovariance_dense(g.adjacency(), 3);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(std::abs(base[i] - dense(pairs[i].u, pairs[i].v)) < 1e-10);
  }
  CHECK(autocovariance_scores(g.adjacency(), 3, pairs, 7) == base);
  set_thread_count(4);
  CHECK(autocovariance_scores(g.adjacency(), 3, pairs, 7) == base);
  set_thread_count(1);
}

TEST_CASE("isolated nodes need self-loops") {
  auto g = AttributedGraph::from_edges(4, {{0, 1}, {1, 2}});
  try {
    autocovariance_dense(g.adjacency(), 2);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDegree);
  }
  auto fixed = with_isolated_self_loops(g.adjacency());
  CHECK(fixed.at(3, 3) == 1.0);
  CHECK(fixed.at(0, 0) == 0.0);
  auto r = autocovariance_dense(fixed, 2);
  CHECK(std::isfinite(r(3, 3)));
}

TEST_CASE("common neighbors and Adamic-Adar against brute force") {
  Rng rng(17);
  auto g = testing::random_graph(rng, 40, 0.15, 0, true);
  std::vector<NodePair> pairs;
  for (NodeId u = 0; u < 40; ++u) {
    for (NodeId v = u + 1; v < 40; ++v) pairs.push_back({u, v});
  }
  auto cn = common_neighbors(g, pairs);
  auto aa = adamic_adar(g, pairs);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    double count = 0, score = 0;
    for (NodeId w = 0; w < 40; ++w) {
      if (g.has_edge(pairs[i].u, w) && g.has_edge(pairs[i].v, w)) {
        count += 1;
        score += 1.0 / std::log(static_cast<double>(g.degree_count(w)));
      }
    }
    CHECK(cn[i] == count);
    CHECK(aa[i] == doctest::Approx(score));
  }
}

TEST_CASE("autocovariance input validation") {
  auto g = AttributedGraph::from_edges(3, {{0, 1}, {1, 2}});
  CHECK_THROWS_AS(autocovariance_dense(g.adjacency(), -1), Error);
  CHECK_THROWS_AS(autocovariance_dense(g.adjacency(), 1, 2), Error);
  std::vector<NodeId> bad{5};
  CHECK_THROWS_AS(autocovariance_batched(g.adjacency(), 1, bad), Error);
  std::vector<NodePair> far{{0, 9}};
  CHECK_THROWS_AS(common_neighbors(g, far), Error);
}
