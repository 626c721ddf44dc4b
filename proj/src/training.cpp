// SPDX-License-Identifier: Apache-2.0
#include "radarseg/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "radarseg/errors.hpp"

namespace radarseg {

namespace {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::vector<int> fine_targets(const Frame& frame) {
  std::vector<int> t;
  t.reserve(frame.points.size());
  for (const LabeledPoint& p : frame.points) t.push_back(static_cast<int>(p.fine_label));
  return t;
}

std::vector<int> coarse_targets(const Frame& frame) {
  std::vector<int> t;
  t.reserve(frame.points.size());
  for (const LabeledPoint& p : frame.points) t.push_back(static_cast<int>(p.coarse_label));
  return t;
}

/// Optimizer state lives outside ModelParams so the params stay a plain
/// bundle of tensors.
class OptimizerState {
 public:
  OptimizerState(const ModelParams& params, const TrainConfig& cfg) : cfg_(cfg) {
    if (cfg.optimizer == Optimizer::Adam) {
      for (const auto& [name, v] : params.named_params()) {
        m_.emplace_back(v.value().size(), 0.0);
        v_.emplace_back(v.value().size(), 0.0);
      }
    }
  }

  void step(const ModelParams& params) {
    const auto named = params.named_params();
    if (cfg_.optimizer == Optimizer::Sgd) {
      for (const auto& [name, value] : named) {
        Tensor& x = value.node()->value;
        const Tensor& g = value.grad();
        for (std::size_t i = 0; i < x.size(); ++i) x[i] -= cfg_.learning_rate * g[i];
      }
      return;
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(t_));
    for (std::size_t p = 0; p < named.size(); ++p) {
      Tensor& x = named[p].second.node()->value;
      const Tensor& g = named[p].second.grad();
      std::vector<double>& m = m_[p];
      std::vector<double>& v = v_[p];
      for (std::size_t i = 0; i < x.size(); ++i) {
        m[i] = cfg_.adam_beta1 * m[i] + (1.0 - cfg_.adam_beta1) * g[i];
        v[i] = cfg_.adam_beta2 * v[i] + (1.0 - cfg_.adam_beta2) * g[i] * g[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        x[i] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.adam_eps);
      }
    }
  }

 private:
  TrainConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  std::uint64_t t_ = 0;
};

const char* class_name(int c) {
  return std::array<const char*, kFineClasses>{"head",     "chest",    "left_arm",
                                               "right_arm", "left_leg", "right_leg"}[c];
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw DataError("train config: epochs must be >= 1");
  if (learning_rate < 0.0) throw DataError("train config: negative learning rate");
  if (lambda_coarse < 0.0 || lambda_graph < 0.0) {
    throw DataError("train config: loss weights must be >= 0");
  }
  if (!(graph.a > 1.0)) throw DataError("train config: graph base a must be > 1");
}

ad::Value total_loss(const ModelParams& params, const Sequence& seq,
                     const TrainConfig& cfg) {
  cfg.validate();
  const auto outputs = forward(params, seq);
  ad::Value total;
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const Frame& frame = seq.frames[k];
    ad::Value term = ad::softmax_cross_entropy(outputs[k].fine_logits, fine_targets(frame));
    if (cfg.lambda_coarse > 0.0) {
      term = ad::add(term, ad::mul_const(ad::softmax_cross_entropy(
                                             outputs[k].coarse_logits, coarse_targets(frame)),
                                         cfg.lambda_coarse));
    }
    if (cfg.lambda_graph > 0.0) {
      const ad::Value probs = ad::softmax_rows(outputs[k].fine_logits);
      term = ad::add(term, ad::mul_const(soft_graph_loss(gauss_weights(frame), probs,
                                                         fine_partition(frame), cfg.graph),
                                         cfg.lambda_graph));
    }
    if (!std::isfinite(term.value().item())) {
      throw NumericError("non-finite loss at frame " + std::to_string(k) +
                         " (frame_index " + std::to_string(frame.frame_index) + ")");
    }
    total = total.defined() ? ad::add(total, term) : term;
  }
  return ad::mul_const(total, 1.0 / static_cast<double>(seq.frames.size()));
}

TrainResult train(ModelParams& params, const Dataset& dataset, const TrainConfig& cfg,
                  const std::function<void(const EpochStats&)>& on_epoch) {
  cfg.validate();
  if (dataset.empty()) throw DataError("train: empty dataset");
  OptimizerState optimizer(params, cfg);
  TrainResult result;
  result.history.reserve(cfg.epochs);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    for (std::size_t s = 0; s < dataset.size(); ++s) {
      params.zero_grads();
      ad::Value loss;
      try {
        loss = total_loss(params, dataset[s], cfg);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", sequence '" +
                           dataset[s].subject_id + "': " + e.what());
      }
      ad::backward(loss);
      optimizer.step(params);
      loss_sum += loss.value().item();
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.loss = loss_sum / static_cast<double>(dataset.size());
    stats.train_acc = point_accuracy(params, dataset);
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return result;
}

double point_accuracy(const ModelParams& params, const Dataset& dataset) {
  std::size_t correct = 0, total = 0;
  for (const Sequence& seq : dataset) {
    const auto preds = predict(params, seq);
    for (std::size_t k = 0; k < seq.frames.size(); ++k) {
      const Frame& frame = seq.frames[k];
      for (std::size_t i = 0; i < frame.points.size(); ++i) {
        ++total;
        if (preds[k].fine.labels[i] == static_cast<int>(frame.points[i].fine_label)) {
          ++correct;
        }
      }
    }
  }
  if (total == 0) throw DataError("point_accuracy: no points");
  return 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

void accumulate_confusion(ConfusionMatrix& confusion, const Partition& truth,
                          const Partition& predicted) {
  if (truth.size() != predicted.size()) {
    throw DataError("confusion: partition lengths differ, " + std::to_string(truth.size()) +
                    " vs " + std::to_string(predicted.size()));
  }
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth.labels[i], p = predicted.labels[i];
    if (t < 0 || t >= kFineClasses || p < 0 || p >= kFineClasses) {
      throw DataError("confusion: label out of range");
    }
    ++confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
}

EvalReport report_from_confusion(const ConfusionMatrix& confusion) {
  EvalReport report;
  report.confusion = confusion;
  double acc_sum = 0.0, iou_sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < kFineClasses; ++c) {
    std::size_t row_sum = 0, col_sum = 0;
    for (std::size_t j = 0; j < kFineClasses; ++j) {
      row_sum += confusion[c][j];
      col_sum += confusion[j][c];
    }
    report.support[c] = row_sum;
    if (row_sum == 0) continue;  // absent from ground truth: excluded from means
    const std::size_t tp = confusion[c][c];
    const std::size_t fp = col_sum - tp;
    const std::size_t fn = row_sum - tp;
    report.per_class_acc[c] = 100.0 * static_cast<double>(tp) / static_cast<double>(row_sum);
    report.per_class_iou[c] =
        100.0 * static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
    acc_sum += report.per_class_acc[c];
    iou_sum += report.per_class_iou[c];
    ++present;
  }
  if (present == 0) throw DataError("metrics: no ground-truth points in any class");
  report.macc = acc_sum / static_cast<double>(present);
  report.miou = iou_sum / static_cast<double>(present);
  return report;
}

EvalReport evaluate(const ModelParams& params, const Dataset& dataset) {
  if (dataset.empty()) throw DataError("evaluate: empty dataset");
  ConfusionMatrix confusion{};
  for (const Sequence& seq : dataset) {
    const auto preds = predict(params, seq);
    for (std::size_t k = 0; k < seq.frames.size(); ++k) {
      accumulate_confusion(confusion, fine_partition(seq.frames[k]), preds[k].fine);
    }
  }
  return report_from_confusion(confusion);
}

std::string EvalReport::table() const {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof(line), "%-10s %8s %8s %9s\n", "class", "acc", "iou", "support");
  out << line;
  for (std::size_t c = 0; c < kFineClasses; ++c) {
    std::snprintf(line, sizeof(line), "%-10s %8.2f %8.2f %9zu\n",
                  class_name(static_cast<int>(c)), per_class_acc[c], per_class_iou[c],
                  support[c]);
    out << line;
  }
  std::snprintf(line, sizeof(line), "mAcc %.2f  mIoU %.2f\n", macc, miou);
  out << line;
  return out.str();
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  for (std::size_t c = 0; c < kFineClasses; ++c) {
    nlohmann::json cls;
    cls["acc"] = per_class_acc[c];
    cls["iou"] = per_class_iou[c];
    cls["support"] = support[c];
    j["per_class"][class_name(static_cast<int>(c))] = cls;
  }
  j["macc"] = macc;
  j["miou"] = miou;
  std::vector<std::vector<std::size_t>> rows;
  for (const auto& row : confusion) rows.emplace_back(row.begin(), row.end());
  j["confusion"] = rows;
  return j.dump(2);
}

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "epoch,loss,train_acc\n";
  for (const EpochStats& e : history) {
    out << e.epoch << ',' << format_number(e.loss) << ',' << format_number(e.train_acc)
        << '\n';
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::size_t LossComparison::first_epoch_at(const std::vector<EpochStats>& history,
                                           double threshold) {
  for (const EpochStats& e : history) {
    if (e.train_acc >= threshold) return e.epoch;
  }
  return 0;
}

LossComparison compare_loss_curves(const Dataset& dataset, const NetConfig& net_cfg,
                                   const TrainConfig& cfg,
                                   const std::function<void(const EpochStats&)>& on_epoch) {
  cfg.validate();
  LossComparison cmp;
  cmp.epochs = cfg.epochs;
  cmp.seed = cfg.seed;
  cmp.lambda_graph = cfg.lambda_graph;

  TrainConfig baseline_cfg = cfg;
  baseline_cfg.lambda_graph = 0.0;
  ModelParams baseline_params = ModelParams::init(net_cfg, cfg.seed);
  cmp.baseline = train(baseline_params, dataset, baseline_cfg, on_epoch).history;

  ModelParams graph_params = ModelParams::init(net_cfg, cfg.seed);
  cmp.with_graph = train(graph_params, dataset, cfg, on_epoch).history;
  return cmp;
}

void write_comparison_csv(const LossComparison& cmp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "epoch,acc_baseline,acc_graph\n";
  for (std::size_t i = 0; i < cmp.epochs; ++i) {
    out << (i + 1) << ',' << format_number(cmp.baseline[i].train_acc) << ','
        << format_number(cmp.with_graph[i].train_acc) << '\n';
  }
  out << "# epochs=" << cmp.epochs << " seed=" << cmp.seed
      << " lambda_graph=" << format_number(cmp.lambda_graph)
      << " first_epoch_acc90_baseline=" << LossComparison::first_epoch_at(cmp.baseline, 90.0)
      << " first_epoch_acc90_graph=" << LossComparison::first_epoch_at(cmp.with_graph, 90.0)
      << "\n";
  if (!out) throw IoError("write to '" + path + "' failed");
}

void write_comparison_svg(const LossComparison& cmp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  const double width = 640, height = 420;
  const double left = 60, right = 20, top = 30, bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  const double n = static_cast<double>(cmp.epochs);

  auto x_of = [&](std::size_t epoch) {
    return left + plot_w * (n > 1 ? static_cast<double>(epoch - 1) / (n - 1) : 0.5);
  };
  auto y_of = [&](double acc) { return top + plot_h * (1.0 - acc / 100.0); };
  auto polyline = [&](const std::vector<EpochStats>& history, const char* color) {
    out << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const EpochStats& e : history) out << x_of(e.epoch) << ',' << y_of(e.train_acc) << ' ';
    out << "\"/>\n";
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "  <text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
      << "Training accuracy vs epoch (seed " << cmp.seed << ")</text>\n";
  for (int tick = 0; tick <= 100; tick += 20) {
    const double y = y_of(tick);
    out << "  <line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << width - right
        << "\" y2=\"" << y << "\" stroke=\"#dddddd\"/>\n";
    out << "  <text x=\"" << left - 8 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << tick << "</text>\n";
  }
  out << "  <line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << top + plot_h << "\" stroke=\"black\"/>\n";
  out << "  <line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << width - right
      << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  out << "  <text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 14
      << "\" text-anchor=\"middle\" font-size=\"12\">epoch (1.." << cmp.epochs << ")</text>\n";
  polyline(cmp.baseline, "#1f77b4");
  polyline(cmp.with_graph, "#d62728");
  out << "  <text x=\"" << left + 10 << "\" y=\"" << top + 16
      << "\" font-size=\"12\" fill=\"#1f77b4\">cross-entropy only</text>\n";
  out << "  <text x=\"" << left + 10 << "\" y=\"" << top + 32
      << "\" font-size=\"12\" fill=\"#d62728\">with graph loss (lambda="
      << format_number(cmp.lambda_graph) << ")</text>\n";
  out << "</svg>\n";
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace radarseg
