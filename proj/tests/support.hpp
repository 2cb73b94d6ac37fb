#pragma once

// Shared generators and independent reference implementations for tests.

#include <cmath>
#include <vector>

#include "gelato/graph.hpp"
#include "gelato/random.hpp"

namespace gelato::testing {

// Erdos-Renyi graph, optionally with Gaussian attributes.
inline AttributedGraph random_graph(Rng& rng, NodeId n, double p, int attr_dim = 0,
                                    bool random_weights = false) {
  std::vector<WeightedEdge> edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (rng.bernoulli(p)) {
        edges.push_back({u, v, random_weights ? rng.uniform(0.1, 2.0) : 1.0});
      }
    }
  }
  std::vector<double> attrs;
  for (int i = 0; i < n * attr_dim; ++i) attrs.push_back(rng.normal());
  return AttributedGraph::from_edges(n, edges, attrs, attr_dim);
}

// Adds a ring so that no node is isolated.
inline AttributedGraph random_connected_graph(Rng& rng, NodeId n, double p,
                                              int attr_dim = 0,
                                              bool random_weights = false) {
  std::vector<WeightedEdge> edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      const bool ring = v == u + 1 || (u == 0 && v == n - 1);
      if (ring || rng.bernoulli(p)) {
        edges.push_back({u, v, random_weights ? rng.uniform(0.1, 2.0) : 1.0});
      }
    }
  }
  std::vector<double> attrs;
  for (int i = 0; i < n * attr_dim; ++i) attrs.push_back(rng.normal());
  return AttributedGraph::from_edges(n, edges, attrs, attr_dim);
}

using Dense = std::vector<std::vector<double>>;

inline Dense to_dense(const CsrMatrix& a) {
  Dense m(a.n, std::vector<double>(a.n, 0.0));
  for (NodeId u = 0; u < a.n; ++u) {
    for (auto e = a.row_ptr[u]; e < a.row_ptr[u + 1]; ++e) m[u][a.col[e]] = a.val[e];
  }
  return m;
}

// Reference autocovariance by naive matrix powers on nested vectors.
inline Dense reference_autocov(const Dense& a, int t) {
  const std::size_t n = a.size();
  std::vector<double> d(n, 0.0);
  double vol = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (double x : a[i]) d[i] += x;
    vol += d[i];
  }
  Dense m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m[i][j] = a[i][j] / d[i];
  }
  Dense p(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) p[i][i] = 1.0;
  for (int s = 0; s < t; ++s) {
    Dense q(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < n; ++j) q[i][j] += p[i][k] * m[k][j];
      }
    }
    p = q;
  }
  Dense r(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      r[i][j] = d[i] / vol * p[i][j] - d[i] * d[j] / (vol * vol);
    }
  }
  return r;
}

inline double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale < 1e-10) return 0.0;
  return std::abs(a - b) / scale;
}

}  // namespace gelato::testing
