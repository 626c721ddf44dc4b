// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "radarseg/graph_loss.hpp"
#include "radarseg/segnet.hpp"

namespace radarseg {

enum class Optimizer { Sgd, Adam };

struct TrainConfig {
  std::size_t epochs = 100;
  double learning_rate = 3e-3;
  std::uint64_t seed = 0;
  double lambda_coarse = 0.3;  // weight of the coarse-head cross-entropy
  double lambda_graph = 0.1;   // weight of the soft graph loss
  /// a = 1.1; the difference is pair-weight-normalized here so the exponent
  /// stays scale-free in cloud size and the cross-entropy leads early
  /// training. --graph-raw restores the unnormalized exponent.
  GraphLossConfig graph{1.1, true};
  Optimizer optimizer = Optimizer::Adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

using Dataset = std::vector<Sequence>;

/// Mean over a sequence's frames of
///   CE(fine) + lambda_coarse * CE(coarse) + lambda_graph * soft_graph_loss,
/// where the graph term compares the fine prediction's soft connectivity
/// against the fine ground-truth partition over that frame's Gauss weights.
/// Cross-entropies are means over the frame's points. Terms with a zero
/// lambda are not built at all, so the degenerate config is exactly the
/// plain fine cross-entropy. Throws NumericError naming the frame if any
/// frame's loss is non-finite.
ad::Value total_loss(const ModelParams& params, const Sequence& seq,
                     const TrainConfig& cfg);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // mean sequence loss
  double train_acc = 0.0; // fine point accuracy, percent
};

struct TrainResult {
  std::vector<EpochStats> history;  // one entry per epoch
};

/// Full-sequence gradient steps in fixed dataset order; deterministic given
/// the config (init happens outside via ModelParams::init). NumericError from
/// a non-finite loss is re-thrown with the epoch named.
TrainResult train(ModelParams& params, const Dataset& dataset, const TrainConfig& cfg,
                  const std::function<void(const EpochStats&)>& on_epoch = {});

/// Percent of points whose fine prediction matches the label.
double point_accuracy(const ModelParams& params, const Dataset& dataset);

using ConfusionMatrix = std::array<std::array<std::size_t, kFineClasses>, kFineClasses>;

void accumulate_confusion(ConfusionMatrix& confusion, const Partition& truth,
                          const Partition& predicted);

/// Per-class accuracy and IoU in percent. Classes with no ground-truth points
/// report 0 and are excluded from the means; `support` tells them apart from
/// genuinely failed classes.
struct EvalReport {
  std::array<double, kFineClasses> per_class_acc{};
  std::array<double, kFineClasses> per_class_iou{};
  std::array<std::size_t, kFineClasses> support{};
  double macc = 0.0;
  double miou = 0.0;
  ConfusionMatrix confusion{};

  std::string table() const;
  std::string to_json() const;
};

EvalReport report_from_confusion(const ConfusionMatrix& confusion);
EvalReport evaluate(const ModelParams& params, const Dataset& dataset);

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path);

/// The two training runs of the loss-function comparison: identical seeds and
/// settings except lambda_graph in {0, configured}.
struct LossComparison {
  std::vector<EpochStats> baseline;    // lambda_graph = 0
  std::vector<EpochStats> with_graph;  // configured lambda_graph
  std::size_t epochs = 0;
  std::uint64_t seed = 0;
  double lambda_graph = 0.0;

  /// First 1-based epoch whose accuracy reached `threshold` percent, or 0.
  static std::size_t first_epoch_at(const std::vector<EpochStats>& history,
                                    double threshold);
};

LossComparison compare_loss_curves(const Dataset& dataset, const NetConfig& net_cfg,
                                   const TrainConfig& cfg,
                                   const std::function<void(const EpochStats&)>& on_epoch = {});

/// Header `epoch,acc_baseline,acc_graph`, one row per epoch, then a comment
/// line recording epochs/seed/lambda and the first epoch each curve reached
/// 90% (the convergence-speed ordering is reported, never asserted).
void write_comparison_csv(const LossComparison& cmp, const std::string& path);
/// Line chart of both accuracy curves.
void write_comparison_svg(const LossComparison& cmp, const std::string& path);

}  // namespace radarseg
