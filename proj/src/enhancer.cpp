#include "gelato/enhancer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>

#include "gelato/parallel.hpp"
#include "gelato/random.hpp"

namespace gelato {

namespace {

struct Candidate {
  double sim;
  NodePair pair;
};

// Orders candidates so that the "best" one compares smallest.
struct BetterFirst {
  bool operator()(const Candidate& a, const Candidate& b) const {
    if (a.sim != b.sim) return a.sim > b.sim;
    return a.pair < b.pair;
  }
};

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

std::vector<NodePair> augmentation_pairs(const AttributedGraph& g, double eta) {
  if (!(eta >= 0.0) || !std::isfinite(eta)) {
    throw Error(ErrorCode::kParameter, "eta must be a finite non-negative number");
  }
  const auto budget =
      static_cast<std::size_t>(std::llround(eta * static_cast<double>(g.num_edges())));
  if (budget == 0) return {};
  if (!g.has_attributes()) {
    throw Error(ErrorCode::kAttributeRequired,
                "augmentation with eta > 0 needs node attributes");
  }
  const NodeId n = g.num_nodes();
  const std::size_t r = static_cast<std::size_t>(g.attr_dim());
  std::vector<double> sq_norm(n, 0.0);
  for (NodeId u = 0; u < n; ++u) {
    for (double x : g.attributes(u)) sq_norm[u] += x * x;
  }

  // Each row block keeps its own bounded heap (worst candidate on top).
  const std::size_t blocks = static_cast<std::size_t>(std::max(1, thread_count())) * 4;
  std::vector<std::vector<Candidate>> kept(blocks);
  const std::size_t rows_per_block = (static_cast<std::size_t>(n) + blocks - 1) / blocks;
  parallel_for(blocks, [&](std::size_t begin, std::size_t end) {
    for (std::size_t blk = begin; blk < end; ++blk) {
      std::priority_queue<Candidate, std::vector<Candidate>, BetterFirst> heap;
      const auto lo = static_cast<NodeId>(std::min<std::size_t>(n, blk * rows_per_block));
      const auto hi =
          static_cast<NodeId>(std::min<std::size_t>(n, (blk + 1) * rows_per_block));
      for (NodeId u = lo; u < hi; ++u) {
        if (sq_norm[u] == 0.0) continue;
        auto xu = g.attributes(u);
        auto nb = g.neighbors(u);
        auto it = std::upper_bound(nb.begin(), nb.end(), u);
        for (NodeId v = u + 1; v < n; ++v) {
          while (it != nb.end() && *it < v) ++it;
          if (it != nb.end() && *it == v) continue;
          if (sq_norm[v] == 0.0) continue;
          auto xv = g.attributes(v);
          double dot = 0.0;
          for (std::size_t i = 0; i < r; ++i) dot += xu[i] * xv[i];
          double sim = std::clamp(
              dot / (std::sqrt(sq_norm[u]) * std::sqrt(sq_norm[v])), -1.0, 1.0);
          Candidate c{sim, {u, v}};
          if (heap.size() < budget) {
            heap.push(c);
          } else if (BetterFirst{}(c, heap.top())) {
            heap.pop();
            heap.push(c);
          }
        }
      }
      auto& out = kept[blk];
      while (!heap.empty()) {
        out.push_back(heap.top());
        heap.pop();
      }
    }
  });

  std::vector<Candidate> all;
  for (auto& part : kept) all.insert(all.end(), part.begin(), part.end());
  std::sort(all.begin(), all.end(), BetterFirst{});
  if (all.size() < budget) {
    warn("only " + std::to_string(all.size()) + " augmentation candidates for a budget of " +
         std::to_string(budget));
  }
  all.resize(std::min(all.size(), budget));
  std::vector<NodePair> out;
  out.reserve(all.size());
  for (const auto& c : all) out.push_back(c.pair);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<NodePair> augment(const AttributedGraph& g, double eta) {
  std::vector<NodePair> extra = augmentation_pairs(g, eta);
  std::vector<NodePair> edges = g.edge_pairs();
  std::vector<NodePair> out;
  out.reserve(edges.size() + extra.size());
  std::merge(edges.begin(), edges.end(), extra.begin(), extra.end(),
             std::back_inserter(out));
  return out;
}

// ---------------------------------------------------------------------------

EdgeNetParams EdgeNetParams::zeros(int attr_dim, int hidden, double dropout) {
  if (attr_dim < 0 || hidden < 1) {
    throw Error(ErrorCode::kParameter, "network needs hidden >= 1 and attr_dim >= 0");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw Error(ErrorCode::kParameter, "dropout must lie in [0, 1)");
  }
  EdgeNetParams p;
  p.input_dim = 2 * attr_dim;
  p.hidden = hidden;
  p.dropout = dropout;
  p.theta.assign(p.b2_offset() + 1, 0.0);
  return p;
}

EdgeNetParams EdgeNetParams::initialize(int attr_dim, int hidden, double dropout,
                                        std::uint64_t seed) {
  EdgeNetParams p = zeros(attr_dim, hidden, dropout);
  Rng rng(seed);
  const double bound1 = p.input_dim > 0 ? 1.0 / std::sqrt(p.input_dim) : 1.0;
  const double bound2 = 1.0 / std::sqrt(hidden);
  for (std::size_t i = 0; i < p.w2_offset(); ++i) p.theta[i] = rng.uniform(-bound1, bound1);
  for (std::size_t i = p.w2_offset(); i < p.theta.size(); ++i) {
    p.theta[i] = rng.uniform(-bound2, bound2);
  }
  return p;
}

std::vector<double> edge_input(std::span<const double> x_u,
                               std::span<const double> x_v, EdgeMode mode) {
  if (x_u.size() != x_v.size()) {
    throw Error(ErrorCode::kDimension, "attribute rows differ in length");
  }
  const std::size_t r = x_u.size();
  std::vector<double> in(2 * r);
  for (std::size_t i = 0; i < r; ++i) {
    if (mode == EdgeMode::kUndirected) {
      in[i] = x_u[i] + x_v[i];
      in[r + i] = std::abs(x_u[i] - x_v[i]);
    } else {
      in[i] = x_u[i];
      in[r + i] = x_v[i];
    }
  }
  return in;
}

double edge_forward(const EdgeNetParams& params, std::span<const double> input,
                    bool train_mode, std::uint64_t mask_seed, EdgeNetTrace* trace) {
  if (input.size() != static_cast<std::size_t>(params.input_dim)) {
    throw Error(ErrorCode::kDimension,
                "network expects input of length " + std::to_string(params.input_dim) +
                    ", got " + std::to_string(input.size()));
  }
  const int h = params.hidden;
  const std::size_t in_dim = input.size();
  const double* w1 = params.theta.data();
  const double* b1 = w1 + params.b1_offset();
  const double* w2 = w1 + params.w2_offset();
  const double b2 = params.theta[params.b2_offset()];
  const bool drop = train_mode && params.dropout > 0.0;
  const double keep_scale = drop ? 1.0 / (1.0 - params.dropout) : 1.0;

  if (trace) {
    trace->input.assign(input.begin(), input.end());
    trace->hidden.assign(h, 0.0);
    trace->mask.assign(h, 1.0);
  }
  double logit = b2;
  for (int j = 0; j < h; ++j) {
    double a = b1[j];
    const double* row = w1 + static_cast<std::size_t>(j) * in_dim;
    for (std::size_t i = 0; i < in_dim; ++i) a += row[i] * input[i];
    double scale = 1.0;
    if (drop) {
      const std::uint64_t bits = mix64(mask_seed ^ mix64(static_cast<std::uint64_t>(j) + 1));
      const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
      scale = u < params.dropout ? 0.0 : keep_scale;
    }
    const double hv = (a > 0.0 ? a : 0.0) * scale;
    if (trace) {
      trace->hidden[j] = hv;
      trace->mask[j] = a > 0.0 ? scale : 0.0;
    }
    logit += w2[j] * hv;
  }
  const double out = sigmoid(logit);
  if (trace) {
    trace->logit = logit;
    trace->output = out;
  }
  return out;
}

void edge_backward(const EdgeNetParams& params, const EdgeNetTrace& trace,
                   double d_output, std::span<double> grad) {
  const double d_logit = d_output * trace.output * (1.0 - trace.output);
  if (d_logit == 0.0) return;
  const int h = params.hidden;
  const std::size_t in_dim = trace.input.size();
  const double* w2 = params.theta.data() + params.w2_offset();
  double* g_w1 = grad.data();
  double* g_b1 = grad.data() + params.b1_offset();
  double* g_w2 = grad.data() + params.w2_offset();
  grad[params.b2_offset()] += d_logit;
  for (int j = 0; j < h; ++j) {
    g_w2[j] += d_logit * trace.hidden[j];
    const double d_pre = d_logit * w2[j] * trace.mask[j];
    if (d_pre == 0.0) continue;
    g_b1[j] += d_pre;
    double* row = g_w1 + static_cast<std::size_t>(j) * in_dim;
    for (std::size_t i = 0; i < in_dim; ++i) row[i] += d_pre * trace.input[i];
  }
}

std::uint64_t pair_mask_seed(std::uint64_t seed, NodePair pair) {
  NodePair c = canonical_pair(pair.u, pair.v);
  return mix64(seed ^ mix64(pair_key(c)));
}

double edge_weight(const EdgeNetParams& params, std::span<const double> x_u,
                   std::span<const double> x_v, EdgeMode mode, bool train_mode,
                   std::uint64_t seed) {
  std::vector<double> in = edge_input(x_u, x_v, mode);
  return edge_forward(params, in, train_mode, seed);
}

// ---------------------------------------------------------------------------

EnhancedGraph combine_with_topology(const AttributedGraph& g,
                                    std::span<const NodePair> pairs,
                                    std::span<const double> topology,
                                    std::span<const double> weights, double alpha,
                                    double beta, double kappa) {
  if (!(alpha >= 0.0 && alpha <= 1.0) || !(beta >= 0.0 && beta <= 1.0)) {
    throw Error(ErrorCode::kParameter, "alpha and beta must lie in [0, 1]");
  }
  if (weights.size() != pairs.size() || topology.size() != pairs.size()) {
    throw Error(ErrorCode::kDimension, "one weight per pair is required");
  }
  EnhancedGraph eg;
  eg.n = g.num_nodes();
  eg.alpha = g.has_attributes() ? alpha : 1.0;
  if (eg.alpha != alpha) warn("graph has no attributes; combining with alpha = 1");
  eg.beta = beta;
  eg.kappa = kappa;
  eg.pairs.reserve(pairs.size());
  std::size_t augmented = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EnhancedPair ep;
    ep.pair = canonical_pair(pairs[i].u, pairs[i].v);
    ep.a = topology[i];
    if (ep.a == 0.0) ++augmented;
    ep.s = g.has_attributes()
               ? cosine_similarity(g.attributes(ep.pair.u), g.attributes(ep.pair.v))
               : 0.0;
    ep.w = weights[i];
    const double raw = eg.alpha * ep.a +
                       (1.0 - eg.alpha) * (beta * ep.w + (1.0 - beta) * ep.s);
    ep.clamped = !(raw >= kappa);
    ep.combined = ep.clamped ? kappa : raw;
    eg.pairs.push_back(ep);
  }
  const std::size_t original = pairs.size() - augmented;
  eg.eta = original > 0 ? static_cast<double>(augmented) / static_cast<double>(original)
                        : 0.0;
  return eg;
}

EnhancedGraph combine(const AttributedGraph& g, std::span<const NodePair> pairs,
                      std::span<const double> weights, double alpha, double beta,
                      double kappa) {
  std::vector<double> topology(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].u < 0 || pairs[i].v < 0 || pairs[i].u >= g.num_nodes() ||
        pairs[i].v >= g.num_nodes() || pairs[i].u == pairs[i].v) {
      throw Error(ErrorCode::kRange, "pair outside the graph");
    }
    topology[i] = g.weight(pairs[i].u, pairs[i].v);
  }
  return combine_with_topology(g, pairs, topology, weights, alpha, beta, kappa);
}

CsrMatrix EnhancedGraph::adjacency() const {
  std::vector<WeightedEdge> edges;
  edges.reserve(pairs.size());
  for (const auto& p : pairs) edges.push_back({p.pair.u, p.pair.v, p.combined});
  return symmetric_csr(n, edges);
}

void save_enhanced(const EnhancedGraph& eg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "# u\tv\tA\ts\tw\tcombined\n";
  for (const auto& p : eg.pairs) {
    const std::string tail = format_real(p.a) + '\t' + format_real(p.s) + '\t' +
                             format_real(p.w) + '\t' + format_real(p.combined) + '\n';
    out << p.pair.u << '\t' << p.pair.v << '\t' << tail;
    out << p.pair.v << '\t' << p.pair.u << '\t' << tail;
  }
}

}  // namespace gelato
