#pragma once

// Finite-difference gradient checking for the trainer.

#include <algorithm>
#include <cmath>
#include <vector>

#include "gelato/trainer.hpp"
#include "support.hpp"

namespace gelato::testing {

// Rectifier and floor-clamp pattern of every enhanced pair. The loss is smooth
// in a parameter interval exactly when this pattern is constant on it.
inline std::vector<char> activation_pattern(const ModelState& model, const AttributedGraph& g,
                                            const BatchProblem& batch) {
  std::vector<NodePair> pairs = model.augmented;
  std::vector<double> topology(pairs.size(), 0.0);
  for (const auto& e : batch.structure) {
    pairs.push_back(canonical_pair(e.u, e.v));
    topology.push_back(e.w);
  }
  std::vector<char> pattern;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto in = edge_input(g.attributes(pairs[i].u), g.attributes(pairs[i].v), model.mode);
    EdgeNetTrace trace;
    const double w = edge_forward(model.net, in, batch.train_mode,
                                  pair_mask_seed(batch.mask_seed, pairs[i]), &trace);
    for (double m : trace.mask) pattern.push_back(m > 0.0);
    const double s = cosine_similarity(g.attributes(pairs[i].u), g.attributes(pairs[i].v));
    const double raw = model.alpha * topology[i] +
                       (1 - model.alpha) * (model.beta * w + (1 - model.beta) * s);
    pattern.push_back(raw >= kWeightFloor);
  }
  return pattern;
}

struct FdResult {
  std::size_t coordinate = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

// Central differences on `count` random coordinates whose +-step stencil stays
// on one smooth piece of the loss.
inline std::vector<FdResult> finite_difference_check(const ModelState& model,
                                                     const AttributedGraph& g,
                                                     const BatchProblem& batch,
                                                     const std::vector<double>& analytic,
                                                     int count, double step, Rng& rng) {
  std::vector<FdResult> out;
  const auto base = activation_pattern(model, g, batch);
  for (int attempts = 0; static_cast<int>(out.size()) < count && attempts < 100 * count;
       ++attempts) {
    const std::size_t k = rng.below(model.net.size());
    auto plus = model, minus = model;
    plus.net.theta[k] += step;
    minus.net.theta[k] -= step;
    if (activation_pattern(plus, g, batch) != base ||
        activation_pattern(minus, g, batch) != base) {
      continue;
    }
    const double fd = (batch_loss(plus, g, batch) - batch_loss(minus, g, batch)) / (2 * step);
    out.push_back({k, analytic[k], fd, relative_error(analytic[k], fd)});
  }
  return out;
}

}  // namespace gelato::testing
