// SPDX-License-Identifier: Apache-2.0
#include "radarseg/graph_loss.hpp"

#include <cmath>

#include "radarseg/errors.hpp"

namespace radarseg {

namespace {

void require_partition_length(const AdjacencyWeights& w, const Partition& part,
                              const char* who) {
  if (part.size() != w.n) {
    throw DataError(std::string(who) + ": partition length " +
                    std::to_string(part.size()) + " does not match " +
                    std::to_string(w.n) + " points");
  }
}

void require_config(const GraphLossConfig& cfg) {
  if (!(cfg.a > 1.0)) {
    throw DataError("graph loss base a must be > 1, got " + std::to_string(cfg.a));
  }
}

/// 1 / sum of w[i][j] over i <= j; 1.0 when normalization is off. Bounds the
/// scaled connectivity difference to [-1, 1] on both the hard and soft paths.
double difference_scale(const AdjacencyWeights& w, const GraphLossConfig& cfg) {
  if (!cfg.normalize) return 1.0;
  double total = 0.0;
  for (std::size_t i = 0; i < w.n; ++i) {
    for (std::size_t j = i; j < w.n; ++j) total += w.at(i, j);
  }
  return 1.0 / total;
}

}  // namespace

Partition fine_partition(const Frame& frame) {
  Partition p;
  p.labels.reserve(frame.points.size());
  for (const LabeledPoint& pt : frame.points)
    p.labels.push_back(static_cast<int>(pt.fine_label));
  return p;
}

Partition coarse_partition(const Frame& frame) {
  Partition p;
  p.labels.reserve(frame.points.size());
  for (const LabeledPoint& pt : frame.points)
    p.labels.push_back(static_cast<int>(pt.coarse_label));
  return p;
}

double connectivity(const AdjacencyWeights& w, const Partition& part) {
  require_partition_length(w, part, "connectivity");
  double acc = 0.0;
  for (std::size_t i = 0; i < w.n; ++i) {
    for (std::size_t j = i + 1; j < w.n; ++j) {
      if (part.labels[i] != part.labels[j]) acc += w.at(i, j);
    }
  }
  return acc;
}

double graph_loss(const AdjacencyWeights& w, const Partition& predicted,
                  const Partition& target, const GraphLossConfig& cfg) {
  require_config(cfg);
  require_partition_length(w, predicted, "graph_loss");
  require_partition_length(w, target, "graph_loss");
  const double c1 = connectivity(w, predicted);
  const double c2 = connectivity(w, target);
  // exp(x * log a) rather than pow(a, x): the soft relaxation is built from
  // pow_const, which evaluates exactly this expression, and the two paths
  // must agree bit-for-bit on one-hot inputs.
  const double scaled = (c1 - c2) * difference_scale(w, cfg);
  return std::exp(std::fabs(scaled) * std::log(cfg.a)) - 1.0;
}

ad::Value soft_graph_loss(const AdjacencyWeights& w, const ad::Value& probs,
                          const Partition& target, const GraphLossConfig& cfg) {
  require_config(cfg);
  require_partition_length(w, target, "soft_graph_loss");
  const Tensor& pv = probs.value();
  if (pv.rank() != 2 || pv.rows() != w.n) {
    throw DataError("soft_graph_loss: probs shape " + pv.shape_str() +
                    " does not match " + std::to_string(w.n) + " points");
  }
  const std::size_t n = pv.rows(), k = pv.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) row_sum += pv.at(i, c);
    if (std::fabs(row_sum - 1.0) > 1e-6) {
      throw DataError("soft_graph_loss: probs row " + std::to_string(i) +
                      " sums to " + std::to_string(row_sum) + ", not a distribution");
    }
  }

  // Soft connectivity over pairs i <= j, in the same traversal order as the
  // hard sum. The diagonal term (1 - |p_i|^2) * 1 vanishes on one-hot rows.
  double c1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t c = 0; c < k; ++c) dot += pv.at(i, c) * pv.at(j, c);
      c1 += (1.0 - dot) * w.at(i, j);
    }
  }
  Tensor weights = w.w;
  ad::Value soft_c1 =
      ad::make_op(Tensor::scalar(c1), {probs}, [weights, n, k](ad::Node& self) {
        Tensor& g = self.parents[0]->grad_storage();
        const Tensor& p = self.parents[0]->value;
        const double gv = self.grad.item();
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = i; j < n; ++j) {
            const double wij = gv * weights.at(i, j);
            if (i == j) {
              for (std::size_t c = 0; c < k; ++c)
                g.at(i, c) -= wij * 2.0 * p.at(i, c);
            } else {
              for (std::size_t c = 0; c < k; ++c) {
                g.at(i, c) -= wij * p.at(j, c);
                g.at(j, c) -= wij * p.at(i, c);
              }
            }
          }
        }
      });

  const double c2 = connectivity(w, target);
  ad::Value diff = ad::mul_const(ad::add_const(soft_c1, -c2), difference_scale(w, cfg));
  return ad::add_const(ad::pow_const(cfg.a, ad::abs(diff)), -1.0);
}

}  // namespace radarseg
