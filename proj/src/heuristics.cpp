#include "gelato/heuristics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "gelato/parallel.hpp"

namespace gelato {

namespace {

void check_pair(const AttributedGraph& g, NodePair p) {
  if (p.u < 0 || p.v < 0 || p.u >= g.num_nodes() || p.v >= g.num_nodes()) {
    throw Error(ErrorCode::kRange, "pair (" + std::to_string(p.u) + ", " +
                                       std::to_string(p.v) +
                                       ") outside the graph");
  }
}

template <class Visit>
void for_each_common(const AttributedGraph& g, NodePair p, Visit&& visit) {
  auto a = g.neighbors(p.u);
  auto b = g.neighbors(p.v);
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      visit(a[i]);
      ++i;
      ++j;
    }
  }
}

}  // namespace

std::vector<double> common_neighbors(const AttributedGraph& g,
                                     std::span<const NodePair> pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (NodePair p : pairs) {
    check_pair(g, p);
    double count = 0.0;
    for_each_common(g, p, [&](NodeId) { count += 1.0; });
    out.push_back(count);
  }
  return out;
}

std::vector<double> adamic_adar(const AttributedGraph& g,
                                std::span<const NodePair> pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (NodePair p : pairs) {
    check_pair(g, p);
    double score = 0.0;
    // A common neighbor is adjacent to both endpoints, so its degree is >= 2.
    for_each_common(g, p, [&](NodeId w) {
      score += 1.0 / std::log(static_cast<double>(g.degree_count(w)));
    });
    out.push_back(score);
  }
  return out;
}

DegreeView checked_degrees(const CsrMatrix& a) {
  DegreeView deg = compute_degrees(a);
  for (NodeId u = 0; u < a.n; ++u) {
    if (!(deg.d[u] > 0.0)) {
      throw Error(ErrorCode::kDegree,
                  "node " + std::to_string(u) +
                      " has zero degree; add self-loops before computing "
                      "autocovariance");
    }
  }
  return deg;
}

CsrMatrix with_isolated_self_loops(const CsrMatrix& a, double weight) {
  CsrMatrix out;
  out.n = a.n;
  out.row_ptr.assign(1, 0);
  out.col.reserve(a.nnz());
  out.val.reserve(a.nnz());
  for (NodeId u = 0; u < a.n; ++u) {
    auto c = a.cols(u);
    auto v = a.vals(u);
    double sum = 0.0;
    for (double x : v) sum += x;
    if (sum > 0.0) {
      out.col.insert(out.col.end(), c.begin(), c.end());
      out.val.insert(out.val.end(), v.begin(), v.end());
    } else {
      out.col.push_back(u);
      out.val.push_back(weight);
    }
    out.row_ptr.push_back(static_cast<std::int64_t>(out.col.size()));
  }
  return out;
}

CsrMatrix transition_matrix(const CsrMatrix& a, const std::vector<double>& d) {
  CsrMatrix t = a;
  for (NodeId u = 0; u < a.n; ++u) {
    for (auto i = t.row_ptr[u]; i < t.row_ptr[u + 1]; ++i) t.val[i] /= d[u];
  }
  return t;
}

void multiply_dense_sparse(const DenseMatrix& p, const CsrMatrix& t,
                           DenseMatrix& out) {
  out = DenseMatrix(p.rows, static_cast<std::size_t>(t.n));
  parallel_for(p.rows, [&](std::size_t begin, std::size_t end) {
    for (std::size_t b = begin; b < end; ++b) {
      auto src = p.row(b);
      auto dst = out.row(b);
      for (NodeId i = 0; i < t.n; ++i) {
        const double x = src[i];
        if (x == 0.0) continue;
        auto c = t.cols(i);
        auto v = t.vals(i);
        for (std::size_t e = 0; e < c.size(); ++e) dst[c[e]] += x * v[e];
      }
    }
  });
}

DenseMatrix autocovariance_dense(const CsrMatrix& a, int t,
                                 std::size_t dense_cap) {
  if (t < 0) throw Error(ErrorCode::kParameter, "t must be non-negative");
  const std::size_t n = static_cast<std::size_t>(a.n);
  if (n > dense_cap) {
    throw Error(ErrorCode::kParameter,
                "dense autocovariance limited to " + std::to_string(dense_cap) +
                    " nodes; use the batched form");
  }
  DegreeView deg = checked_degrees(a);

  DenseMatrix walk(n, n);
  for (NodeId u = 0; u < a.n; ++u) {
    auto c = a.cols(u);
    auto v = a.vals(u);
    for (std::size_t e = 0; e < c.size(); ++e) walk(u, c[e]) = v[e] / deg.d[u];
  }

  DenseMatrix power(n, n);
  for (std::size_t i = 0; i < n; ++i) power(i, i) = 1.0;
  DenseMatrix next(n, n);
  for (int step = 0; step < t; ++step) {
    std::fill(next.data.begin(), next.data.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        const double x = power(i, k);
        if (x == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) next(i, j) += x * walk(k, j);
      }
    }
    std::swap(power, next);
  }

  const double vol = deg.vol;
  DenseMatrix r(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      r(i, j) = deg.d[i] / vol * power(i, j) - deg.d[i] * deg.d[j] / (vol * vol);
    }
  }
  return r;
}

ScoreBlock autocovariance_batched(const CsrMatrix& a, int t,
                                  std::span<const NodeId> batch) {
  if (t < 0) throw Error(ErrorCode::kParameter, "t must be non-negative");
  if (batch.empty()) throw Error(ErrorCode::kParameter, "empty batch");
  for (NodeId u : batch) {
    if (u < 0 || u >= a.n) {
      throw Error(ErrorCode::kRange,
                  "batch node " + std::to_string(u) + " outside the graph");
    }
  }
  DegreeView deg = checked_degrees(a);
  CsrMatrix walk = transition_matrix(a, deg.d);
  const std::size_t n = static_cast<std::size_t>(a.n);

  // P starts as the batch rows of (D^-1 A)^min(t,1); each further product
  // adds one step, so P = rows of (D^-1 A)^t.
  DenseMatrix p(batch.size(), n);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    NodeId u = batch[b];
    if (t == 0) {
      p(b, u) = 1.0;
      continue;
    }
    auto c = walk.cols(u);
    auto v = walk.vals(u);
    for (std::size_t e = 0; e < c.size(); ++e) p(b, c[e]) = v[e];
  }
  DenseMatrix next;
  for (int step = 1; step < t; ++step) {
    multiply_dense_sparse(p, walk, next);
    std::swap(p, next);
  }

  ScoreBlock block;
  block.rows.assign(batch.begin(), batch.end());
  block.metric = "autocovariance";
  block.t = t;
  block.scores = DenseMatrix(batch.size(), n);
  const double vol = deg.vol;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const double du = deg.d[batch[b]];
    for (std::size_t j = 0; j < n; ++j) {
      block.scores(b, j) = du / vol * p(b, j) - du * deg.d[j] / (vol * vol);
    }
  }
  return block;
}

std::vector<double> autocovariance_scores(const CsrMatrix& a, int t,
                                          std::span<const NodePair> pairs,
                                          std::size_t batch_rows) {
  std::vector<double> out(pairs.size(), 0.0);
  if (pairs.empty()) return out;
  batch_rows = std::max<std::size_t>(1, batch_rows);
  // Group pair indices by first endpoint.
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return pairs[x].u < pairs[y].u;
  });
  std::size_t pos = 0;
  while (pos < order.size()) {
    std::vector<NodeId> rows;
    std::unordered_map<NodeId, std::size_t> row_index;
    std::size_t end = pos;
    while (end < order.size()) {
      NodeId u = pairs[order[end]].u;
      if (!row_index.count(u)) {
        if (rows.size() == batch_rows) break;
        row_index.emplace(u, rows.size());
        rows.push_back(u);
      }
      ++end;
    }
    ScoreBlock block = autocovariance_batched(a, t, rows);
    for (std::size_t i = pos; i < end; ++i) {
      const NodePair& pr = pairs[order[i]];
      if (pr.v < 0 || pr.v >= a.n) {
        throw Error(ErrorCode::kRange, "pair endpoint outside the graph");
      }
      out[order[i]] = block.scores(row_index.at(pr.u), pr.v);
    }
    pos = end;
  }
  return out;
}

}  // namespace gelato
