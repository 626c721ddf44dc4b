// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "radarseg/autodiff.hpp"
#include "radarseg/pointcloud.hpp"

namespace radarseg {

/// Per-point class assignment of one frame.
struct Partition {
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  bool operator==(const Partition&) const = default;
};

Partition fine_partition(const Frame& frame);
Partition coarse_partition(const Frame& frame);

struct GraphLossConfig {
  double a = 1.1;  // exponent base; must be > 1
  /// Divide C1 - C2 by the total pair weight (sum of w[i][j] over i <= j,
  /// the exact upper bound of both connectivities) before exponentiating.
  /// Off by default: the raw formula. Training turns it on, because on
  /// clouds of tens of points the raw exponent reaches a^hundreds and its
  /// gradient drowns every other loss term.
  bool normalize = false;
};

/// Cut weight of a labeled graph: the sum of w[i][j] over pairs i <= j whose
/// labels differ. The diagonal never contributes (a point shares its own
/// label), so this is a strict upper-triangle sum in practice; summing the
/// full matrix would silently double it.
double connectivity(const AdjacencyWeights& w, const Partition& part);

/// a^|C1 - C2| - 1 where C1/C2 are the connectivities of the predicted and
/// target partitions over the same weights. Zero exactly iff C1 == C2.
double graph_loss(const AdjacencyWeights& w, const Partition& predicted,
                  const Partition& target, const GraphLossConfig& cfg = {});

/// Differentiable relaxation: the pair indicator becomes
/// 1 - sum_k probs[i][k]*probs[j][k], which collapses to the hard indicator
/// on one-hot rows, so this equals graph_loss bit-for-bit there (identical
/// summation order). Each probs row must sum to 1 within 1e-6. The |.| kink
/// at C1 == C2 uses subgradient 0.
ad::Value soft_graph_loss(const AdjacencyWeights& w, const ad::Value& probs,
                          const Partition& target, const GraphLossConfig& cfg = {});

}  // namespace radarseg
