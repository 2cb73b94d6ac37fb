#include <cmath>

#include "doctest.h"
#include "gelato/heuristics.hpp"
#include "gelato/sbm.hpp"
#include "gelato/trainer.hpp"
#include "gradcheck.hpp"
#include "support.hpp"

using namespace gelato;

namespace {

struct Fixture {
  AttributedGraph g;
  ModelState model;
  BatchProblem batch;
};

// Attributed graph with a held-out batch of positives and random contrast sets.
Fixture make_fixture(std::uint64_t seed, double alpha, double beta, double eta,
                     NodeId n = 30, int positives = 8, int negatives = 5) {
  Rng rng(seed);
  Fixture f;
  f.g = testing::random_connected_graph(rng, n, 0.15, 4);
  TrainConfig cfg;
  cfg.alpha = alpha;
  cfg.beta = beta;
  cfg.eta = eta;
  cfg.seed = seed;
  cfg.hidden = 16;
  f.model = initial_model(f.g, cfg);
  auto edges = f.g.edges();
  rng.shuffle(edges);
  for (int i = 0; i < positives; ++i) f.batch.positives.push_back({edges[i].u, edges[i].v});
  f.batch.structure.assign(edges.begin() + positives, edges.end());
  for (int i = 0; i < positives; ++i) {
    std::vector<NodePair> set;
    while (static_cast<int>(set.size()) < negatives) {
      NodeId u = static_cast<NodeId>(rng.below(n)), v = static_cast<NodeId>(rng.below(n));
      if (u != v && !f.g.has_edge(u, v)) set.push_back(canonical_pair(u, v));
    }
    f.batch.negatives.push_back(set);
  }
  f.batch.train_mode = true;
  f.batch.mask_seed = seed * 7 + 1;
  return f;
}

// Scores recomputed from scratch with dense matrices.
std::vector<double> dense_pipeline(const Fixture& f, bool standardize) {
  const NodeId n = f.g.num_nodes();
  const auto& m = f.model;
  testing::Dense a(n, std::vector<double>(n, 0.0)), topo = a;
  std::vector<std::vector<bool>> present(n, std::vector<bool>(n, false));
  for (const auto& e : f.batch.structure) {
    topo[e.u][e.v] = topo[e.v][e.u] = e.w;
    present[e.u][e.v] = present[e.v][e.u] = true;
  }
  for (auto p : m.augmented) present[p.u][p.v] = present[p.v][p.u] = true;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (!present[u][v]) continue;
      const double s = cosine_similarity(f.g.attributes(u), f.g.attributes(v));
      double w = 0.0;
      if (m.alpha < 1.0 && m.beta > 0.0) {
        w = edge_weight(m.net, f.g.attributes(u), f.g.attributes(v), m.mode,
                        f.batch.train_mode, pair_mask_seed(f.batch.mask_seed, {u, v}));
      }
      const double raw = m.alpha * topo[u][v] + (1 - m.alpha) * (m.beta * w + (1 - m.beta) * s);
      a[u][v] = a[v][u] = std::max(raw, kWeightFloor);
    }
  }
  for (NodeId u = 0; u < n; ++u) {
    double row = 0.0;
    for (double x : a[u]) row += x;
    if (row == 0.0) a[u][u] = 1.0;
  }
  auto r = testing::reference_autocov(a, m.t);
  std::vector<double> scores;
  for (auto p : f.batch.positives) scores.push_back(r[p.u][p.v]);
  for (const auto& set : f.batch.negatives) {
    for (auto p : set) scores.push_back(r[p.u][p.v]);
  }
  if (!standardize) return scores;
  double mean = 0.0, var = 0.0;
  for (double x : scores) mean += x;
  mean /= scores.size();
  for (double x : scores) var += (x - mean) * (x - mean);
  const double sigma = std::sqrt(var / scores.size());
  for (double& x : scores) x = (x - mean) / sigma;
  return scores;
}

}  // namespace

TEST_CASE("n-pair loss values") {
  std::vector<double> pos{0.3};
  std::vector<std::vector<double>> neg{{0.3}};
  CHECK(npair_loss(pos, neg) == doctest::Approx(std::log(2.0)));
  std::vector<double> pos1{1.0};
  std::vector<std::vector<double>> neg1{{0.0, 0.0}};
  CHECK(npair_loss(pos1, neg1) == doctest::Approx(std::log(1.0 + 2.0 * std::exp(-1.0))));
  CHECK(npair_loss(pos1, neg1) == doctest::Approx(0.5514).epsilon(1e-4));
  double previous = 1e9;
  for (double gap : {0.0, 1.0, 5.0, 20.0, 100.0}) {
    std::vector<double> p{gap};
    std::vector<std::vector<double>> q{{0.0, -1.0}};
    const double loss = npair_loss(p, q);
    CHECK(loss < previous);
    CHECK(loss >= 0.0);
    previous = loss;
  }
  CHECK(previous < 1e-40);
  std::vector<std::string> warnings;
  set_warning_sink([&](std::string_view w) { warnings.emplace_back(w); });
  CHECK(npair_loss({}, {}) == 0.0);
  set_warning_sink(nullptr);
  CHECK(warnings.size() == 1);
}

TEST_CASE("forward scores equal the dense pipeline") {
  for (std::uint64_t seed : {1, 2, 3}) {
    for (bool train : {true, false}) {
      auto f = make_fixture(seed, 0.3, 0.7, 0.5);
      f.batch.train_mode = train;
      auto scored = forward_scores(f.model, f.g, f.batch);
      auto raw = dense_pipeline(f, false);
      auto z = dense_pipeline(f, true);
      REQUIRE(scored.raw.size() == raw.size());
      CHECK(scored.standardized_ok);
      for (std::size_t i = 0; i < raw.size(); ++i) {
        CHECK(std::abs(scored.raw[i] - raw[i]) < 1e-10);
        CHECK(std::abs(scored.standardized[i] - z[i]) < 1e-10);
      }
    }
  }
}

TEST_CASE("alpha one without augmentation scores the residual graph") {
  auto f = make_fixture(4, 1.0, 0.5, 0.0);
  auto scored = forward_scores(f.model, f.g, f.batch);
  auto residual = f.g.with_edges(f.batch.structure);
  auto a = with_isolated_self_loops(residual.adjacency());
  auto plain = autocovariance_scores(a, f.model.t, scored.pairs);
  for (std::size_t i = 0; i < plain.size(); ++i) {
    CHECK(std::abs(scored.raw[i] - plain[i]) < 1e-12);
  }
}

TEST_CASE("gradient matches finite differences") {
  for (std::uint64_t seed : {1, 2, 3}) {
    auto f = make_fixture(seed, 0.3, 0.7, 0.5);
    auto buffer = gradient(f.model, f.g, f.batch);
    REQUIRE(buffer.valid);
    CHECK(buffer.loss == doctest::Approx(batch_loss(f.model, f.g, f.batch)));
    Rng rng(seed + 100);
    auto results = testing::finite_difference_check(f.model, f.g, f.batch, buffer.grad, 20,
                                                    1e-4, rng);
    CHECK(results.size() == 20);
    for (const auto& r : results) {
      INFO("coordinate " << r.coordinate << " analytic " << r.analytic << " fd " << r.numeric);
      CHECK(r.rel_error < 1e-4);
    }
  }
}

TEST_CASE("the smoothness guard detects a rectifier crossing") {
  auto f = make_fixture(1, 0.3, 0.7, 0.5);
  auto base = testing::activation_pattern(f.model, f.g, f.batch);
  auto moved = f.model;
  for (double& x : moved.net.theta) x = -x;
  CHECK(testing::activation_pattern(moved, f.g, f.batch) != base);
}

TEST_CASE("cross-entropy gradient matches finite differences") {
  auto f = make_fixture(5, 0.4, 0.6, 0.3);
  auto buffer = gradient(f.model, f.g, f.batch, LossKind::kCrossEntropy);
  Rng rng(6);
  for (int c = 0; c < 10; ++c) {
    const std::size_t k = rng.below(f.model.net.size());
    auto plus = f.model, minus = f.model;
    plus.net.theta[k] += 1e-4;
    minus.net.theta[k] -= 1e-4;
    const double fd = (batch_loss(plus, f.g, f.batch, LossKind::kCrossEntropy) -
                       batch_loss(minus, f.g, f.batch, LossKind::kCrossEntropy)) /
                      2e-4;
    CHECK(testing::relative_error(buffer.grad[k], fd) < 1e-4);
  }
}

TEST_CASE("beta zero disconnects the network") {
  auto f = make_fixture(7, 0.3, 0.0, 0.5);
  auto buffer = gradient(f.model, f.g, f.batch);
  CHECK(buffer.grad.size() == f.model.net.size());
  for (double x : buffer.grad) CHECK(x == 0.0);
  auto other = f.model;
  for (double& x : other.net.theta) x += 0.3;
  CHECK(forward_scores(other, f.g, f.batch).raw == forward_scores(f.model, f.g, f.batch).raw);
}

TEST_CASE("duplicating every positive doubles the gradient") {
  auto f = make_fixture(8, 0.3, 0.7, 0.5);
  auto single = gradient(f.model, f.g, f.batch);
  auto doubled = f.batch;
  // Duplicates leave the standardization statistics unchanged.
  doubled.positives.insert(doubled.positives.end(), f.batch.positives.begin(),
                           f.batch.positives.end());
  doubled.negatives.insert(doubled.negatives.end(), f.batch.negatives.begin(),
                           f.batch.negatives.end());
  auto twice = gradient(f.model, f.g, doubled);
  CHECK(twice.loss == doctest::Approx(2.0 * single.loss).epsilon(1e-12));
  for (std::size_t i = 0; i < single.grad.size(); ++i) {
    CHECK(std::abs(twice.grad[i] - 2.0 * single.grad[i]) <=
          1e-10 * std::max(1.0, std::abs(single.grad[i])));
  }
}

TEST_CASE("single Adam step from zero state") {
  std::vector<double> params{1.0, -2.0, 0.5};
  GradientBuffer g;
  g.grad = {0.3, -4.0, 0.0};
  AdamState state;
  adam_step(params, g, state, 0.01);
  CHECK(state.step == 1);
  CHECK(params[0] == doctest::Approx(1.0 - 0.01 * 0.3 / (0.3 + 1e-8)));
  CHECK(params[1] == doctest::Approx(-2.0 + 0.01 * 4.0 / (4.0 + 1e-8)));
  CHECK(params[2] == 0.5);
}

TEST_CASE("Adam fixed point and invalid buffers") {
  std::vector<double> params{1.0, 2.0};
  AdamState state;
  GradientBuffer zero;
  zero.grad = {0.0, 0.0};
  adam_step(params, zero, state, 0.1);
  CHECK(params == std::vector<double>{1.0, 2.0});
  CHECK(state.step == 1);
  GradientBuffer bad;
  bad.grad = {1.0, 1.0};
  bad.valid = false;
  adam_step(params, bad, state, 0.1);
  CHECK(params == std::vector<double>{1.0, 2.0});
  CHECK(state.step == 1);
  GradientBuffer wrong;
  wrong.grad = {1.0};
  CHECK_THROWS_AS(adam_step(params, wrong, state, 0.1), Error);
}

TEST_CASE("Adam steps stay within the learning rate under a constant gradient") {
  std::vector<double> params{0.0, 0.0};
  GradientBuffer g;
  g.grad = {2.5, -0.01};
  AdamState state;
  for (int i = 0; i < 500; ++i) {
    auto before = params;
    adam_step(params, g, state, 0.001);
    CHECK(std::abs(params[0] - before[0]) <= 0.001 * (1 + 1e-9));
    CHECK(std::abs(params[1] - before[1]) <= 0.001 * (1 + 1e-9));
    CHECK(params[0] < before[0]);
    CHECK(params[1] > before[1]);
  }
  CHECK(params[0] == doctest::Approx(-0.5).epsilon(1e-6));
}

TEST_CASE("training is deterministic and records history") {
  SbmParams params{3, 30, 0.3, 0.03};
  auto g = sample_sbm(params, 4, SbmAttributeOptions{0.1});
  auto split = unbiased_split(g, {}, 4);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.hidden = 16;
  cfg.negatives_per_positive = 10;
  cfg.seed = 4;
  auto a = train(g, split, cfg);
  auto b = train(g, split, cfg);
  CHECK(a.model.net.theta == b.model.net.theta);
  REQUIRE(a.history.size() == 4);
  CHECK(std::isnan(a.history[0].loss));
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].epoch == static_cast<int>(i));
    CHECK(a.history[i].val_prec == b.history[i].val_prec);
  }
  double best = -1.0;
  for (const auto& h : a.history) best = std::max(best, h.val_prec);
  CHECK(a.model.selection_metric == best);
  CHECK(a.history[a.model.selected_epoch].val_prec == best);

  cfg.seed = 5;
  CHECK(train(g, split, cfg).model.net.theta != a.model.net.theta);
}

TEST_CASE("test scores cover the whole test set") {
  SbmParams params{2, 30, 0.3, 0.05};
  auto g = sample_sbm(params, 9, SbmAttributeOptions{0.1});
  auto split = unbiased_split(g, {}, 9);
  TrainConfig cfg;
  cfg.hidden = 8;
  auto model = initial_model(g.with_edges(split.training_structure()), cfg);
  auto scores = score_test(model, split, 7);
  CHECK(scores.pos.size() == split.test_pos.size());
  CHECK(static_cast<std::int64_t>(scores.neg.size()) == split.test_neg.size());
  auto again = score_test(model, split, 256);
  CHECK(again.pos == scores.pos);
  CHECK(again.neg == scores.neg);
}

TEST_CASE("model checkpoints round trip") {
  auto f = make_fixture(10, 0.3, 0.7, 0.5);
  f.model.selected_epoch = 7;
  f.model.selection_metric = 0.125;
  auto path = std::filesystem::temp_directory_path() / "gelato_model.txt";
  save_model(f.model, path);
  auto back = load_model(path);
  CHECK(back.net.theta == f.model.net.theta);
  CHECK(back.net.hidden == f.model.net.hidden);
  CHECK(back.augmented == f.model.augmented);
  CHECK(back.alpha == f.model.alpha);
  CHECK(back.selected_epoch == 7);
  CHECK(back.selection_metric == 0.125);
}

TEST_CASE("configuration checks") {
  TrainConfig cfg;
  cfg.lr = -1;
  cfg.alpha = 2;
  try {
    cfg.validate();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("lr") != std::string::npos);
    CHECK(std::string(e.what()).find("alpha") != std::string::npos);
  }
  auto plain = AttributedGraph::from_edges(3, {{0, 1}, {1, 2}});
  TrainConfig defaults;
  try {
    initial_model(plain, defaults);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kAttributeRequired);
  }
  defaults.alpha = 1.0;
  defaults.eta = 0.0;
  CHECK_NOTHROW(initial_model(plain, defaults));
  CHECK(default_grid().size() == 80);
}
