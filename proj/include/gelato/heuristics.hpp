#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gelato/graph.hpp"

namespace gelato {

struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return data[i * cols + j];
  }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * cols, cols};
  }
};

// Dense rows of a score matrix for a batch of nodes.
struct ScoreBlock {
  std::vector<NodeId> rows;
  DenseMatrix scores;  // rows.size() x n
  std::string metric;
  int t = 0;
};

// |N(u) ∩ N(v)| on unweighted neighbor sets.
std::vector<double> common_neighbors(const AttributedGraph& g,
                                     std::span<const NodePair> pairs);

// Sum over common neighbors w of 1 / ln(deg(w)).
std::vector<double> adamic_adar(const AttributedGraph& g,
                                std::span<const NodePair> pairs);

inline constexpr std::size_t kDenseAutocovCap = 5000;

// Validates that every row of `a` has positive weight and returns the
// degrees. Throws kDegree naming the first empty node.
DegreeView checked_degrees(const CsrMatrix& a);

// Copy of `a` with a self-loop of `weight` on every node whose row is
// empty, so the random-walk transition is defined everywhere.
CsrMatrix with_isolated_self_loops(const CsrMatrix& a, double weight = 1.0);

// D^-1 A with the same sparsity pattern.
CsrMatrix transition_matrix(const CsrMatrix& a, const std::vector<double>& d);

// out = p * t for dense p (|batch| x n) and sparse t (n x n).
void multiply_dense_sparse(const DenseMatrix& p, const CsrMatrix& t,
                           DenseMatrix& out);

// R = (D / vol) (D^-1 A)^t - d d^T / vol^2 with dense arithmetic. Only for
// n <= dense_cap.
DenseMatrix autocovariance_dense(const CsrMatrix& a, int t,
                                 std::size_t dense_cap = kDenseAutocovCap);

// Rows of R for the given batch, computed as t dense-by-sparse products so
// memory stays O(|batch| n).
ScoreBlock autocovariance_batched(const CsrMatrix& a, int t,
                                  std::span<const NodeId> batch);

// R_uv for arbitrary pairs, computing rows of the first endpoints in chunks
// of batch_rows.
std::vector<double> autocovariance_scores(const CsrMatrix& a, int t,
                                          std::span<const NodePair> pairs,
                                          std::size_t batch_rows = 256);

}  // namespace gelato
