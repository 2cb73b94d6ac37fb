#include "gelato/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "gelato/heuristics.hpp"
#include "gelato/parallel.hpp"
#include "gelato/random.hpp"

namespace gelato {

void TrainConfig::validate() const {
  std::vector<std::string> problems;
  if (!(lr > 0.0) || !std::isfinite(lr)) problems.push_back("lr must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) problems.push_back("dropout must lie in [0, 1)");
  if (t < 1) problems.push_back("t must be >= 1");
  if (epochs < 0) problems.push_back("epochs must be >= 0");
  if (batch_size < 1) problems.push_back("batch_size must be >= 1");
  if (negatives_per_positive < 1) problems.push_back("negatives_per_positive must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) problems.push_back("alpha must lie in [0, 1]");
  if (!(beta >= 0.0 && beta <= 1.0)) problems.push_back("beta must lie in [0, 1]");
  if (!(eta >= 0.0) || !std::isfinite(eta)) problems.push_back("eta must be >= 0");
  if (hidden < 1) problems.push_back("hidden must be >= 1");
  if (score_batch_rows < 1) problems.push_back("score_batch_rows must be >= 1");
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    throw Error(ErrorCode::kParameter, msg);
  }
}

ModelState initial_model(const AttributedGraph& structure, const TrainConfig& config) {
  config.validate();
  const bool needs_attrs = config.eta > 0.0 || (config.beta > 0.0 && config.alpha < 1.0);
  if (needs_attrs && !structure.has_attributes()) {
    throw Error(ErrorCode::kAttributeRequired,
                "eta > 0, or beta > 0 with alpha < 1, needs node attributes");
  }
  ModelState model;
  model.net = EdgeNetParams::initialize(structure.attr_dim(), config.hidden, config.dropout,
                                        derive_seed(config.seed, "trainer.init"));
  model.alpha = config.alpha;
  model.beta = config.beta;
  model.eta = config.eta;
  model.t = config.t;
  model.mode = config.mode;
  model.augmented = augmentation_pairs(structure, config.eta);
  return model;
}

double npair_loss(std::span<const double> pos,
                  std::span<const std::vector<double>> neg_sets) {
  if (pos.empty()) {
    warn("n-pair loss over an empty positive set");
    return 0.0;
  }
  if (neg_sets.size() != pos.size()) {
    throw Error(ErrorCode::kDimension, "one contrast set per positive is required");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    if (neg_sets[i].empty()) {
      throw Error(ErrorCode::kParameter, "every positive needs a contrast negative");
    }
    double mx = pos[i];
    for (double x : neg_sets[i]) mx = std::max(mx, x);
    double sum = std::exp(pos[i] - mx);
    for (double x : neg_sets[i]) sum += std::exp(x - mx);
    total += mx + std::log(sum) - pos[i];
  }
  return total;
}

// ---------------------------------------------------------------------------

namespace {

// Enhanced graph of one structure together with the bookkeeping needed to
// route gradients from matrix entries back to network parameters.
struct Enhanced {
  CsrMatrix a;
  std::vector<EnhancedPair> pairs;
  std::vector<std::int64_t> entry_pair;  // per CSR entry, -1 for self-loops
  std::vector<EdgeNetTrace> traces;
};

Enhanced build_enhanced(const ModelState& model, const AttributedGraph& g,
                        std::span<const WeightedEdge> structure, bool train_mode,
                        std::uint64_t mask_seed, bool keep_traces) {
  std::vector<std::pair<NodePair, double>> merged;
  merged.reserve(structure.size() + model.augmented.size());
  for (const auto& e : structure) merged.push_back({canonical_pair(e.u, e.v), e.w});
  std::sort(merged.begin(), merged.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<std::pair<NodePair, double>> aug;
  for (NodePair p : model.augmented) aug.push_back({p, 0.0});
  std::vector<std::pair<NodePair, double>> all;
  all.reserve(merged.size() + aug.size());
  std::merge(merged.begin(), merged.end(), aug.begin(), aug.end(), std::back_inserter(all),
             [](const auto& x, const auto& y) { return x.first < y.first; });
  // An augmented pair that is also a structural edge keeps its edge weight.
  std::vector<NodePair> pairs;
  std::vector<double> topology;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (!pairs.empty() && pairs.back() == all[i].first) {
      topology.back() = std::max(topology.back(), all[i].second);
      continue;
    }
    pairs.push_back(all[i].first);
    topology.push_back(all[i].second);
  }

  Enhanced out;
  std::vector<double> w(pairs.size(), 0.0);
  const bool uses_net = model.alpha < 1.0 && model.beta > 0.0 && g.has_attributes();
  if (uses_net) {
    if (keep_traces) out.traces.resize(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        auto in = edge_input(g.attributes(pairs[i].u), g.attributes(pairs[i].v), model.mode);
        w[i] = edge_forward(model.net, in, train_mode, pair_mask_seed(mask_seed, pairs[i]),
                            keep_traces ? &out.traces[i] : nullptr);
      }
    });
  }
  EnhancedGraph eg = combine_with_topology(g, pairs, topology, w, model.alpha, model.beta);
  out.a = with_isolated_self_loops(eg.adjacency());
  out.pairs = std::move(eg.pairs);
  out.entry_pair.resize(out.a.nnz());
  for (NodeId u = 0; u < out.a.n; ++u) {
    for (auto e = out.a.row_ptr[u]; e < out.a.row_ptr[u + 1]; ++e) {
      const NodeId v = out.a.col[e];
      if (u == v) {
        out.entry_pair[e] = -1;
        continue;
      }
      const NodePair key = canonical_pair(u, v);
      auto it = std::lower_bound(out.pairs.begin(), out.pairs.end(), key,
                                 [](const EnhancedPair& p, NodePair k) { return p.pair < k; });
      out.entry_pair[e] = it - out.pairs.begin();
    }
  }
  return out;
}

std::vector<NodePair> gathered_pairs(const BatchProblem& batch) {
  if (batch.negatives.size() != batch.positives.size()) {
    throw Error(ErrorCode::kDimension, "one contrast set per positive is required");
  }
  std::vector<NodePair> pairs(batch.positives.begin(), batch.positives.end());
  for (const auto& set : batch.negatives) pairs.insert(pairs.end(), set.begin(), set.end());
  return pairs;
}

struct Standardized {
  std::vector<double> z;
  double sigma = 1.0;
  bool ok = true;
};

Standardized standardize(const std::vector<double>& s) {
  Standardized out;
  const double n = static_cast<double>(s.size());
  double mean = 0.0;
  for (double x : s) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : s) var += (x - mean) * (x - mean);
  var /= n;
  const double sigma = std::sqrt(var);
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    warn("score batch has zero variance; skipping standardization");
    out.z = s;
    out.ok = false;
    return out;
  }
  out.sigma = sigma;
  out.z.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out.z[i] = (s[i] - mean) / sigma;
  return out;
}

// Loss over standardized scores laid out as in gathered_pairs, and its
// gradient with respect to those scores.
double loss_and_grad(const BatchProblem& batch, const std::vector<double>& z,
                     LossKind kind, std::vector<double>* grad) {
  if (grad) grad->assign(z.size(), 0.0);
  double total = 0.0;
  if (kind == LossKind::kCrossEntropy) {
    const std::size_t num_pos = batch.positives.size();
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double y = i < num_pos ? 1.0 : 0.0;
      const double x = y > 0.0 ? -z[i] : z[i];
      total += std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
      if (grad) (*grad)[i] = 1.0 / (1.0 + std::exp(-z[i])) - y;
    }
    return total;
  }
  std::size_t offset = batch.positives.size();
  for (std::size_t i = 0; i < batch.positives.size(); ++i) {
    const std::size_t count = batch.negatives[i].size();
    if (count == 0) throw Error(ErrorCode::kParameter, "every positive needs a contrast negative");
    double mx = z[i];
    for (std::size_t j = 0; j < count; ++j) mx = std::max(mx, z[offset + j]);
    double sum = std::exp(z[i] - mx);
    for (std::size_t j = 0; j < count; ++j) sum += std::exp(z[offset + j] - mx);
    const double lse = mx + std::log(sum);
    total += lse - z[i];
    if (grad) {
      (*grad)[i] += std::exp(z[i] - lse) - 1.0;
      for (std::size_t j = 0; j < count; ++j) {
        (*grad)[offset + j] += std::exp(z[offset + j] - lse);
      }
    }
    offset += count;
  }
  return total;
}

// Distinct first endpoints, ascending, and the row index of every pair.
struct RowLayout {
  std::vector<NodeId> rows;
  std::vector<std::size_t> pair_row;
};

RowLayout row_layout(const std::vector<NodePair>& pairs, NodeId n) {
  RowLayout layout;
  std::vector<std::int64_t> index(n, -1);
  for (const auto& p : pairs) {
    if (p.u < 0 || p.v < 0 || p.u >= n || p.v >= n) {
      throw Error(ErrorCode::kRange, "scored pair outside the graph");
    }
    if (index[p.u] < 0) {
      index[p.u] = 0;
      layout.rows.push_back(p.u);
    }
  }
  std::sort(layout.rows.begin(), layout.rows.end());
  for (std::size_t i = 0; i < layout.rows.size(); ++i) index[layout.rows[i]] = i;
  layout.pair_row.reserve(pairs.size());
  for (const auto& p : pairs) layout.pair_row.push_back(static_cast<std::size_t>(index[p.u]));
  return layout;
}

struct Forward {
  Enhanced enhanced;
  std::vector<NodePair> pairs;
  std::vector<double> raw;
  Standardized std;
};

Forward run_forward(const ModelState& model, const AttributedGraph& g,
                    const BatchProblem& batch, bool keep_traces) {
  Forward f;
  f.enhanced = build_enhanced(model, g, batch.structure, batch.train_mode, batch.mask_seed,
                              keep_traces);
  f.pairs = gathered_pairs(batch);
  if (f.pairs.empty()) return f;
  f.raw = autocovariance_scores(f.enhanced.a, model.t, f.pairs);
  f.std = standardize(f.raw);
  return f;
}

}  // namespace

CsrMatrix enhanced_adjacency(const ModelState& model, const AttributedGraph& g,
                             std::span<const WeightedEdge> structure, bool train_mode,
                             std::uint64_t mask_seed) {
  return build_enhanced(model, g, structure, train_mode, mask_seed, false).a;
}

ScoredBatch forward_scores(const ModelState& model, const AttributedGraph& g,
                           const BatchProblem& batch) {
  Forward f = run_forward(model, g, batch, false);
  ScoredBatch out;
  out.pairs = std::move(f.pairs);
  out.raw = std::move(f.raw);
  out.standardized = std::move(f.std.z);
  out.standardized_ok = f.std.ok;
  return out;
}

double batch_loss(const ModelState& model, const AttributedGraph& g,
                  const BatchProblem& batch, LossKind loss) {
  if (batch.positives.empty()) {
    warn("n-pair loss over an empty positive set");
    return 0.0;
  }
  Forward f = run_forward(model, g, batch, false);
  return loss_and_grad(batch, f.std.z, loss, nullptr);
}

GradientBuffer gradient(const ModelState& model, const AttributedGraph& g,
                        const BatchProblem& batch, LossKind loss) {
  GradientBuffer buf;
  buf.grad.assign(model.net.size(), 0.0);
  if (batch.positives.empty()) {
    warn("n-pair loss over an empty positive set");
    return buf;
  }
  Forward f = run_forward(model, g, batch, true);
  std::vector<double> dz;
  buf.loss = loss_and_grad(batch, f.std.z, loss, &dz);

  // Back through standardization.
  const std::size_t count = dz.size();
  std::vector<double> ds(count);
  if (f.std.ok) {
    double mean_g = 0.0, mean_gz = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      mean_g += dz[i];
      mean_gz += dz[i] * f.std.z[i];
    }
    mean_g /= static_cast<double>(count);
    mean_gz /= static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i) {
      ds[i] = (dz[i] - mean_g - f.std.z[i] * mean_gz) / f.std.sigma;
    }
  } else {
    ds = dz;
  }

  const bool uses_net = model.alpha < 1.0 && model.beta > 0.0 && g.has_attributes();
  if (!uses_net) {
    buf.valid = std::isfinite(buf.loss);
    return buf;
  }

  // Back through R = (d_b / vol) P_t - d_b d_v / vol^2, P_{l+1} = P_l T,
  // P_1 = T[rows], T = D^-1 A, d = A 1, vol = sum d.
  const CsrMatrix& a = f.enhanced.a;
  const NodeId n = a.n;
  const int t = model.t;
  DegreeView deg = checked_degrees(a);
  const double vol = deg.vol;
  CsrMatrix walk = transition_matrix(a, deg.d);
  RowLayout layout = row_layout(f.pairs, n);

  std::vector<double> d_walk(a.nnz(), 0.0);
  std::vector<double> d_deg(n, 0.0);
  double d_vol = 0.0;

  const std::size_t chunk = 256;
  for (std::size_t r0 = 0; r0 < layout.rows.size(); r0 += chunk) {
    const std::size_t r1 = std::min(layout.rows.size(), r0 + chunk);
    const std::size_t m = r1 - r0;
    std::vector<DenseMatrix> p(t);
    p[0] = DenseMatrix(m, n);
    for (std::size_t b = 0; b < m; ++b) {
      const NodeId u = layout.rows[r0 + b];
      auto c = walk.cols(u);
      auto v = walk.vals(u);
      for (std::size_t e = 0; e < c.size(); ++e) p[0](b, c[e]) = v[e];
    }
    for (int l = 1; l < t; ++l) multiply_dense_sparse(p[l - 1], walk, p[l]);

    DenseMatrix gr(m, n);
    for (std::size_t i = 0; i < f.pairs.size(); ++i) {
      const std::size_t r = layout.pair_row[i];
      if (r < r0 || r >= r1) continue;
      gr(r - r0, f.pairs[i].v) += ds[i];
    }

    DenseMatrix dp(m, n);
    for (std::size_t b = 0; b < m; ++b) {
      const NodeId u = layout.rows[r0 + b];
      const double du = deg.d[u];
      double acc_du = 0.0;
      for (NodeId v = 0; v < n; ++v) {
        const double gv = gr(b, v);
        if (gv == 0.0) continue;
        const double pt = p[t - 1](b, v);
        dp(b, v) = gv * du / vol;
        acc_du += gv * (pt / vol - deg.d[v] / (vol * vol));
        d_deg[v] -= gv * du / (vol * vol);
        d_vol += gv * (-du * pt / (vol * vol) + 2.0 * du * deg.d[v] / (vol * vol * vol));
      }
      d_deg[u] += acc_du;
    }

    for (int l = t - 1; l >= 1; --l) {
      // P_{l+1} = P_l T: dT_ij += sum_b P_l[b,i] dP[b,j]; dP_l = dP T^T.
      const DenseMatrix& pl = p[l - 1];
      parallel_for(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          for (auto e = walk.row_ptr[i]; e < walk.row_ptr[i + 1]; ++e) {
            const NodeId j = walk.col[e];
            double acc = 0.0;
            for (std::size_t b = 0; b < m; ++b) acc += pl(b, i) * dp(b, j);
            d_walk[e] += acc;
          }
        }
      });
      DenseMatrix prev(m, n);
      parallel_for(m, [&](std::size_t begin, std::size_t end) {
        for (std::size_t b = begin; b < end; ++b) {
          for (NodeId i = 0; i < n; ++i) {
            double acc = 0.0;
            for (auto e = walk.row_ptr[i]; e < walk.row_ptr[i + 1]; ++e) {
              acc += walk.val[e] * dp(b, walk.col[e]);
            }
            prev(b, i) = acc;
          }
        }
      });
      std::swap(dp, prev);
    }
    for (std::size_t b = 0; b < m; ++b) {
      const NodeId u = layout.rows[r0 + b];
      for (auto e = walk.row_ptr[u]; e < walk.row_ptr[u + 1]; ++e) {
        d_walk[e] += dp(b, walk.col[e]);
      }
    }
  }

  // T = A / d (row-wise), vol = sum d, d = A 1.
  std::vector<double> d_a(a.nnz(), 0.0);
  for (NodeId i = 0; i < n; ++i) {
    double acc = 0.0;
    for (auto e = a.row_ptr[i]; e < a.row_ptr[i + 1]; ++e) {
      d_a[e] += d_walk[e] / deg.d[i];
      acc += d_walk[e] * a.val[e];
    }
    d_deg[i] -= acc / (deg.d[i] * deg.d[i]);
    d_deg[i] += d_vol;
  }
  std::vector<double> d_pair(f.enhanced.pairs.size(), 0.0);
  for (NodeId i = 0; i < n; ++i) {
    for (auto e = a.row_ptr[i]; e < a.row_ptr[i + 1]; ++e) {
      d_a[e] += d_deg[i];
      const auto k = f.enhanced.entry_pair[e];
      if (k >= 0) d_pair[k] += d_a[e];
    }
  }

  const double w_scale = (1.0 - model.alpha) * model.beta;
  for (std::size_t k = 0; k < d_pair.size(); ++k) {
    if (f.enhanced.pairs[k].clamped || d_pair[k] == 0.0) continue;
    edge_backward(model.net, f.enhanced.traces[k], w_scale * d_pair[k], buf.grad);
  }

  buf.valid = std::isfinite(buf.loss);
  for (double x : buf.grad) {
    if (!std::isfinite(x)) {
      buf.valid = false;
      break;
    }
  }
  return buf;
}

void adam_step(std::vector<double>& params, const GradientBuffer& grads, AdamState& state,
               double lr) {
  if (!grads.valid) return;
  if (grads.grad.size() != params.size()) {
    throw Error(ErrorCode::kDimension, "gradient and parameter shapes differ");
  }
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double gi = grads.grad[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * gi;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * gi * gi;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

// ---------------------------------------------------------------------------

EvalScores score_split(const ModelState& model, const AttributedGraph& g,
                       std::span<const WeightedEdge> structure,
                       std::span<const NodePair> positives, const NegativeSet& negatives,
                       std::size_t batch_rows) {
  const CsrMatrix a = enhanced_adjacency(model, g, structure, false, 0);
  const NodeId n = a.n;
  batch_rows = std::max<std::size_t>(1, batch_rows);
  std::vector<NodePair> pos(positives.begin(), positives.end());
  for (auto& p : pos) p = canonical_pair(p.u, p.v);
  std::vector<std::size_t> order(pos.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return pos[x].u < pos[y].u; });

  EvalScores out;
  out.pos.assign(pos.size(), 0.0);
  out.neg.reserve(static_cast<std::size_t>(std::max<std::int64_t>(0, negatives.size())));
  std::size_t next_pos = 0;
  for (NodeId r0 = 0; r0 < n; r0 += static_cast<NodeId>(batch_rows)) {
    const NodeId r1 = std::min<NodeId>(n, r0 + static_cast<NodeId>(batch_rows));
    std::vector<NodeId> rows;
    for (NodeId u = r0; u < r1; ++u) rows.push_back(u);
    ScoreBlock block = autocovariance_batched(a, model.t, rows);
    while (next_pos < order.size() && pos[order[next_pos]].u < r1) {
      const NodePair& p = pos[order[next_pos]];
      out.pos[order[next_pos]] = block.scores(p.u - r0, p.v);
      ++next_pos;
    }
    negatives.for_each_in_rows(r0, r1, [&](NodePair p) {
      out.neg.push_back(block.scores(p.u - r0, p.v));
    });
  }
  return out;
}

EvalScores score_test(const ModelState& model, const SplitSet& split,
                      std::size_t batch_rows) {
  return score_split(model, *split.graph, split.test_structure(), split.test_pos,
                     split.test_neg, batch_rows);
}

namespace {

double validation_precision(const ModelState& model, const AttributedGraph& g,
                            const std::vector<WeightedEdge>& structure,
                            const SplitSet& split, std::size_t batch_rows) {
  if (split.valid_pos.empty()) return 0.0;
  EvalScores s = score_split(model, g, structure, split.valid_pos, split.valid_neg,
                             batch_rows);
  return precision_at_k(s.pos, s.neg, s.pos.size());
}

}  // namespace

TrainResult train(const AttributedGraph& g, const SplitSet& split, const TrainConfig& config) {
  config.validate();
  if (split.regime == SplitRegime::kBiased) {
    throw Error(ErrorCode::kParameter, "training needs an unbiased or partitioned split");
  }
  const std::vector<WeightedEdge> structure = split.training_structure();
  const AttributedGraph train_graph = g.with_edges(structure);
  TrainResult result;
  result.model = initial_model(train_graph, config);
  ModelState& model = result.model;

  double best = validation_precision(model, g, structure, split, config.score_batch_rows);
  std::vector<double> best_theta = model.net.theta;
  int best_epoch = 0;
  result.history.push_back({0, std::nan(""), best});

  AdamState adam;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const std::uint64_t epoch_seed = derive_seed(config.seed, "trainer.epoch", epoch);
    auto batches = positive_mask_batches(split, config.batch_size,
                                         derive_seed(epoch_seed, "batches"));
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      BatchProblem problem;
      problem.structure = residual_structure(split, batches[b]);
      problem.positives = batches[b].positives;
      problem.train_mode = true;
      problem.mask_seed = derive_seed(epoch_seed, "dropout", b);
      Rng rng(derive_seed(epoch_seed, "contrast", b));
      problem.negatives.resize(problem.positives.size());
      for (auto& set : problem.negatives) {
        set.reserve(config.negatives_per_positive);
        for (int j = 0; j < config.negatives_per_positive; ++j) {
          set.push_back(split.train_neg.sample(rng));
        }
      }
      GradientBuffer grads = gradient(model, g, problem, config.loss);
      if (!grads.valid) {
        warn("invalid gradient in epoch " + std::to_string(epoch) + ", batch " +
             std::to_string(b) + "; update skipped");
        continue;
      }
      epoch_loss += grads.loss;
      adam_step(model.net.theta, grads, adam, config.lr);
    }
    const double val = validation_precision(model, g, structure, split,
                                            config.score_batch_rows);
    result.history.push_back({epoch, epoch_loss, val});
    if (val > best) {
      best = val;
      best_theta = model.net.theta;
      best_epoch = epoch;
    }
  }
  model.net.theta = best_theta;
  model.selection_metric = best;
  model.selected_epoch = best_epoch;
  return result;
}

std::vector<GridPoint> default_grid() {
  std::vector<GridPoint> grid;
  for (double eta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    for (double alpha : {0.0, 0.25, 0.5, 0.75}) {
      for (double beta : {0.25, 0.5, 0.75, 1.0}) grid.push_back({alpha, beta, eta});
    }
  }
  return grid;
}

GridResult grid_search(const AttributedGraph& g, const SplitSet& split,
                       const TrainConfig& base, std::span<const GridPoint> grid) {
  if (grid.empty()) throw Error(ErrorCode::kParameter, "empty hyperparameter grid");
  GridResult out;
  bool have = false;
  for (const auto& point : grid) {
    TrainConfig config = base;
    config.alpha = point.alpha;
    config.beta = point.beta;
    config.eta = point.eta;
    TrainResult r = train(g, split, config);
    out.scores.push_back({point, r.model.selection_metric});
    if (!have || r.model.selection_metric > out.result.model.selection_metric) {
      out.best = point;
      out.result = std::move(r);
      have = true;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void save_model(const ModelState& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "gelato-model 1\n";
  out << "alpha " << format_real(model.alpha) << '\n';
  out << "beta " << format_real(model.beta) << '\n';
  out << "eta " << format_real(model.eta) << '\n';
  out << "t " << model.t << '\n';
  out << "mode " << (model.mode == EdgeMode::kUndirected ? "undirected" : "directed") << '\n';
  out << "input_dim " << model.net.input_dim << '\n';
  out << "hidden " << model.net.hidden << '\n';
  out << "dropout " << format_real(model.net.dropout) << '\n';
  out << "selection_metric " << format_real(model.selection_metric) << '\n';
  out << "selected_epoch " << model.selected_epoch << '\n';
  out << "augmented " << model.augmented.size() << '\n';
  for (NodePair p : model.augmented) out << p.u << '\t' << p.v << '\n';
  out << "theta " << model.net.theta.size() << '\n';
  for (double x : model.net.theta) out << format_real(x) << '\n';
}

ModelState load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  auto fail = [&](const std::string& what) {
    return Error(ErrorCode::kParse, path.string() + ": " + what);
  };
  std::string key, value;
  if (!(in >> key >> value) || key != "gelato-model" || value != "1") {
    throw fail("not a model checkpoint (version 1)");
  }
  ModelState model;
  auto expect = [&](const char* name) {
    if (!(in >> key >> value) || key != name) throw fail(std::string("expected ") + name);
    return value;
  };
  model.alpha = parse_real(expect("alpha"));
  model.beta = parse_real(expect("beta"));
  model.eta = parse_real(expect("eta"));
  model.t = std::stoi(expect("t"));
  const std::string mode = expect("mode");
  if (mode == "undirected") {
    model.mode = EdgeMode::kUndirected;
  } else if (mode == "directed") {
    model.mode = EdgeMode::kDirected;
  } else {
    throw fail("unknown mode " + mode);
  }
  model.net.input_dim = std::stoi(expect("input_dim"));
  model.net.hidden = std::stoi(expect("hidden"));
  model.net.dropout = parse_real(expect("dropout"));
  model.selection_metric = parse_real(expect("selection_metric"));
  model.selected_epoch = std::stoi(expect("selected_epoch"));
  const std::size_t num_aug = std::stoull(expect("augmented"));
  for (std::size_t i = 0; i < num_aug; ++i) {
    NodeId u, v;
    if (!(in >> u >> v)) throw fail("truncated augmented pair list");
    model.augmented.push_back(canonical_pair(u, v));
  }
  const std::size_t num_theta = std::stoull(expect("theta"));
  if (num_theta != model.net.b2_offset() + 1) throw fail("parameter count mismatch");
  model.net.theta.resize(num_theta);
  for (auto& x : model.net.theta) {
    if (!(in >> value)) throw fail("truncated parameter list");
    x = parse_real(value);
  }
  return model;
}

void save_history(std::span<const EpochRecord> history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "epoch\tloss\tval_prec\n";
  for (const auto& h : history) {
    out << h.epoch << '\t' << format_real(h.loss) << '\t' << format_real(h.val_prec) << '\n';
  }
}

}  // namespace gelato
