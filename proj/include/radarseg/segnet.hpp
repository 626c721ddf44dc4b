// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "radarseg/autodiff.hpp"
#include "radarseg/graph_loss.hpp"
#include "radarseg/lstm.hpp"
#include "radarseg/pointcloud.hpp"

namespace radarseg {

/// Architecture hyperparameters. Defaults are laptop-scale; every field is
/// CLI-overridable.
struct NetConfig {
  std::vector<std::size_t> point_feat_dims{64, 64, 128};  // shared per-point MLP
  std::size_t global_dim = 128;    // pooled global signature width
  std::size_t lstm_hidden = 64;    // recurrent state width
  std::size_t global_rounds = 2;   // pool-concat repetitions (>= 1)
  std::vector<std::size_t> head_dims{128, 64};  // hidden widths of each head

  static constexpr std::size_t fine_classes = 6;
  static constexpr std::size_t coarse_classes = 3;

  void validate() const;
  /// Per-point feature width after the shared MLP.
  std::size_t point_feat_width() const { return point_feat_dims.back(); }
  /// Feature width entering the classifier heads.
  std::size_t head_input_width() const;

  bool operator==(const NetConfig&) const = default;
};

std::string net_config_to_json(const NetConfig& cfg);
NetConfig net_config_from_json(const std::string& json_text);

/// One fully-connected layer: y = x * weight + bias (bias broadcast per row).
struct DenseLayer {
  ad::Value weight;  // [in x out]
  ad::Value bias;    // [1 x out]
};

/// All trainable tensors. Values are shared handles: copying ModelParams
/// aliases the same parameters.
struct ModelParams {
  NetConfig config;
  std::vector<DenseLayer> point_mlp;    // 3 -> point_feat_dims...
  std::vector<DenseLayer> global_proj;  // one per pool-concat round, -> global_dim
  LstmParams lstm;                      // input = global_dim
  std::vector<DenseLayer> fine_head;    // -> 6
  std::vector<DenseLayer> coarse_head;  // -> 3

  /// Seeded uniform fan-in init for every layer (biases zero).
  static ModelParams init(const NetConfig& cfg, std::uint64_t seed);

  /// Canonical (name, tensor) list; the checkpoint field order and the
  /// optimizer slot order both follow it.
  std::vector<std::pair<std::string, ad::Value>> named_params() const;
  std::size_t param_count() const;
  void zero_grads() const;
};

/// Frame positions as a constant [n x 3] leaf, centered on the frame
/// centroid. Centering removes the walking translation so the per-point MLP
/// sees body-relative coordinates; it is permutation-invariant and uses only
/// the frame itself.
ad::Value frame_points_value(const Frame& frame);

/// Shared per-point MLP plus the pooled global signature of one frame:
/// returns (per-point features [n x d_p], signature F [1 x global_dim]).
/// F is the column-wise max of the projected per-point features, so it is
/// invariant to point order and to duplicated points.
std::pair<ad::Value, ad::Value> frame_global_feature(const ModelParams& params,
                                                     const ad::Value& points);

struct FrameOutput {
  ad::Value fine_logits;    // [n x 6]
  ad::Value coarse_logits;  // [n x 3]
};

/// Full forward pass over a sequence. Per frame k: per-point features and
/// signature F_k; F_k drives one recurrent step giving h_k; [feat | F_k |
/// h_k] is concatenated per point; further pool-concat rounds append more
/// pooled signatures; both heads map the result to per-point logits.
/// Frame k's outputs depend on frames 1..k only.
std::vector<FrameOutput> forward(const ModelParams& params, const Sequence& seq);

struct FramePrediction {
  Partition fine;
  Partition coarse;
};

/// Per-point argmax of both heads' logits; ties pick the lowest class index.
/// The two heads are independent: coarsening the fine argmax need not equal
/// the coarse head's argmax, so don't assert that anywhere.
std::vector<FramePrediction> predict(const ModelParams& params, const Sequence& seq);

/// Versioned text container of named tensors (name, shape, row-major values
/// at 17 significant digits). Save/load round trips are bit-exact.
void save_model(const ModelParams& params, const std::string& path);
ModelParams load_model(const std::string& path);

}  // namespace radarseg
