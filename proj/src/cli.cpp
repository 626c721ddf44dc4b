// SPDX-License-Identifier: Apache-2.0
#include "radarseg/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "radarseg/errors.hpp"
#include "radarseg/pointcloud.hpp"
#include "radarseg/segnet.hpp"
#include "radarseg/synthdata.hpp"
#include "radarseg/training.hpp"

namespace radarseg::cli {

namespace {

/// Missing/invalid flag combinations detected after CLI11 parsing; maps to
/// exit code 1 like any other usage error.
struct UsageError {
  std::string message;
};

std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

nlohmann::json net_config_json(const NetConfig& cfg) {
  return nlohmann::json::parse(net_config_to_json(cfg));
}

nlohmann::json train_config_json(const TrainConfig& cfg) {
  nlohmann::json j;
  j["epochs"] = cfg.epochs;
  j["learning_rate"] = cfg.learning_rate;
  j["seed"] = cfg.seed;
  j["lambda_coarse"] = cfg.lambda_coarse;
  j["lambda_graph"] = cfg.lambda_graph;
  j["graph_a"] = cfg.graph.a;
  j["graph_normalize"] = cfg.graph.normalize;
  j["optimizer"] = cfg.optimizer == Optimizer::Adam ? "adam" : "sgd";
  j["adam_beta1"] = cfg.adam_beta1;
  j["adam_beta2"] = cfg.adam_beta2;
  j["adam_eps"] = cfg.adam_eps;
  return j;
}

/// Progress printer: roughly ten lines regardless of epoch count.
std::function<void(const EpochStats&)> progress_printer(std::size_t epochs) {
  const std::size_t every = std::max<std::size_t>(1, epochs / 10);
  return [every, epochs](const EpochStats& e) {
    if (e.epoch % every == 0 || e.epoch == epochs) {
      std::cout << "epoch " << e.epoch << "/" << epochs << "  loss " << e.loss
                << "  train_acc " << e.train_acc << "%\n";
    }
  };
}

void write_segmented_csv(const std::vector<Sequence>& sequences,
                         const std::vector<std::vector<FramePrediction>>& predictions,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "subject_id,frame_idx,x,y,z,fine_label,coarse_label,pred_fine,pred_coarse\n";
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    const Sequence& seq = sequences[s];
    for (std::size_t k = 0; k < seq.frames.size(); ++k) {
      const Frame& frame = seq.frames[k];
      for (std::size_t i = 0; i < frame.points.size(); ++i) {
        const LabeledPoint& p = frame.points[i];
        out << seq.subject_id << ',' << frame.frame_index << ','
            << format_g17(p.position.x) << ',' << format_g17(p.position.y) << ','
            << format_g17(p.position.z) << ',' << to_string(p.fine_label) << ','
            << to_string(p.coarse_label) << ','
            << to_string(static_cast<FineLabel>(predictions[s][k].fine.labels[i])) << ','
            << to_string(static_cast<CoarseLabel>(predictions[s][k].coarse.labels[i]))
            << '\n';
      }
    }
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

struct NetFlags {
  std::vector<std::size_t> point_dims{64, 64, 128};
  std::size_t global_dim = 128;
  std::size_t hidden = 64;
  std::size_t global_rounds = 2;
  std::vector<std::size_t> head_dims{128, 64};

  void attach(CLI::App* cmd) {
    cmd->add_option("--point-dims", point_dims, "per-point MLP widths")
        ->delimiter(',');
    cmd->add_option("--global-dim", global_dim, "global signature width");
    cmd->add_option("--hidden", hidden, "recurrent hidden size");
    cmd->add_option("--global-rounds", global_rounds, "pool-concat repetitions");
    cmd->add_option("--head-dims", head_dims, "classifier head hidden widths")
        ->delimiter(',');
  }

  NetConfig to_config() const {
    NetConfig cfg;
    cfg.point_feat_dims = point_dims;
    cfg.global_dim = global_dim;
    cfg.lstm_hidden = hidden;
    cfg.global_rounds = global_rounds;
    cfg.head_dims = head_dims;
    cfg.validate();
    return cfg;
  }
};

struct TrainFlags {
  std::size_t epochs = 100;
  double lr = 3e-3;
  std::uint64_t seed = 0;
  double lambda_graph = 0.1;
  double lambda_coarse = 0.3;
  double graph_a = 1.1;
  bool graph_raw = false;
  std::string optimizer = "adam";

  void attach(CLI::App* cmd) {
    cmd->add_option("--epochs", epochs, "training epochs");
    cmd->add_option("--lr", lr, "learning rate");
    cmd->add_option("--seed", seed, "rng seed (init order is fixed)");
    cmd->add_option("--lambda-graph", lambda_graph, "graph loss weight");
    cmd->add_option("--lambda-coarse", lambda_coarse, "coarse head loss weight");
    cmd->add_option("--graph-a", graph_a, "graph loss exponent base");
    cmd->add_flag("--graph-raw", graph_raw,
                  "use the unnormalized connectivity difference in the graph loss");
    cmd->add_option("--optimizer", optimizer, "optimizer")
        ->check(CLI::IsMember({"sgd", "adam"}));
  }

  TrainConfig to_config() const {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.learning_rate = lr;
    cfg.seed = seed;
    cfg.lambda_graph = lambda_graph;
    cfg.lambda_coarse = lambda_coarse;
    cfg.graph.a = graph_a;
    cfg.graph.normalize = !graph_raw;
    cfg.optimizer = optimizer == "sgd" ? Optimizer::Sgd : Optimizer::Adam;
    cfg.validate();
    return cfg;
  }
};

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"human point-cloud semantic segmentation on sparse radar-style data"};
  app.require_subcommand(1);

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "write a synthetic walking dataset");
  GenConfig gen_cfg;
  std::size_t gen_subjects = 1;
  std::string gen_out;
  bool gen_dump = false;
  gen_cmd->add_option("--frames", gen_cfg.n_frames, "frames per subject");
  gen_cmd->add_option("--subjects", gen_subjects, "number of subjects");
  gen_cmd->add_option("--points", gen_cfg.points_per_frame, "points per frame");
  gen_cmd->add_option("--seed", gen_cfg.seed, "rng seed");
  gen_cmd->add_option("--gait-period", gen_cfg.gait_period_frames, "frames per gait cycle");
  gen_cmd->add_option("--noise-sigma", gen_cfg.noise_sigma, "position noise, meters");
  gen_cmd->add_option("--dropout", gen_cfg.part_dropout_prob, "per-part dropout probability");
  gen_cmd->add_flag("--dump-config", gen_dump, "print the effective config and exit");
  auto* gen_out_opt = gen_cmd->add_option("--out", gen_out, "output csv path");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model on a labeled csv");
  std::string train_data, train_out, train_history;
  NetFlags train_net;
  TrainFlags train_flags;
  bool train_dump = false;
  auto* train_data_opt = train_cmd->add_option("--data", train_data, "labeled csv path");
  auto* train_out_opt = train_cmd->add_option("--out", train_out, "checkpoint path");
  train_cmd->add_option("--history", train_history, "per-epoch csv path");
  train_net.attach(train_cmd);
  train_flags.attach(train_cmd);
  train_cmd->add_flag("--dump-config", train_dump, "print the effective config and exit");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "report mAcc/mIoU of a model on a csv");
  std::string eval_model, eval_data;
  bool eval_json = false;
  eval_cmd->add_option("--model", eval_model, "checkpoint path")->required();
  eval_cmd->add_option("--data", eval_data, "labeled csv path")->required();
  eval_cmd->add_flag("--json", eval_json, "emit the report as json");

  // segment
  auto* seg_cmd = app.add_subcommand("segment", "write per-point predictions for a csv");
  std::string seg_model, seg_data, seg_out;
  seg_cmd->add_option("--model", seg_model, "checkpoint path")->required();
  seg_cmd->add_option("--data", seg_data, "input csv path")->required();
  seg_cmd->add_option("--out", seg_out, "output csv path")->required();

  // compare-loss
  auto* cmp_cmd = app.add_subcommand(
      "compare-loss", "train twice (with/without the graph loss) and plot both curves");
  std::string cmp_data, cmp_prefix;
  NetFlags cmp_net;
  TrainFlags cmp_flags;
  cmp_flags.epochs = 80;
  bool cmp_dump = false;
  auto* cmp_data_opt = cmp_cmd->add_option("--data", cmp_data, "labeled csv path");
  auto* cmp_prefix_opt =
      cmp_cmd->add_option("--out-prefix", cmp_prefix, "artifact prefix (writes .csv and .svg)");
  cmp_net.attach(cmp_cmd);
  cmp_flags.attach(cmp_cmd);
  cmp_cmd->add_flag("--dump-config", cmp_dump, "print the effective config and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(gen_cmd)) {
      if (gen_dump) {
        nlohmann::json j;
        j["command"] = "generate";
        j["frames"] = gen_cfg.n_frames;
        j["subjects"] = gen_subjects;
        j["points"] = gen_cfg.points_per_frame;
        j["gait_period"] = gen_cfg.gait_period_frames;
        j["noise_sigma"] = gen_cfg.noise_sigma;
        j["dropout"] = gen_cfg.part_dropout_prob;
        j["seed"] = gen_cfg.seed;
        std::cout << j.dump(2) << "\n";
        return 0;
      }
      if (gen_out_opt->count() == 0) throw UsageError{"generate: --out is required"};
      const auto sequences = generate_dataset(gen_cfg, gen_subjects);
      write_sequences(sequences, gen_out);
      std::size_t frames = 0;
      for (const Sequence& s : sequences) frames += s.frames.size();
      std::cout << "wrote " << sequences.size() << " subject(s), " << frames
                << " frames to " << gen_out << "\n";
      return 0;
    }

    if (app.got_subcommand(train_cmd)) {
      const NetConfig net_cfg = train_net.to_config();
      const TrainConfig cfg = train_flags.to_config();
      if (train_dump) {
        nlohmann::json j;
        j["command"] = "train";
        j["net"] = net_config_json(net_cfg);
        j["train"] = train_config_json(cfg);
        std::cout << j.dump(2) << "\n";
        return 0;
      }
      if (train_data_opt->count() == 0) throw UsageError{"train: --data is required"};
      if (train_out_opt->count() == 0) throw UsageError{"train: --out is required"};
      const Dataset dataset = read_sequences(train_data);
      ModelParams params = ModelParams::init(net_cfg, cfg.seed);
      std::cout << "training on " << dataset.size() << " sequence(s), "
                << params.param_count() << " parameters\n";
      const TrainResult result = train(params, dataset, cfg, progress_printer(cfg.epochs));
      save_model(params, train_out);
      if (!train_history.empty()) write_history_csv(result.history, train_history);
      std::cout << "checkpoint written to " << train_out << "\n";
      return 0;
    }

    if (app.got_subcommand(eval_cmd)) {
      const ModelParams params = load_model(eval_model);
      const Dataset dataset = read_sequences(eval_data);
      const EvalReport report = evaluate(params, dataset);
      if (eval_json) {
        std::cout << report.to_json() << "\n";
      } else {
        std::cout << report.table();
      }
      return 0;
    }

    if (app.got_subcommand(seg_cmd)) {
      const ModelParams params = load_model(seg_model);
      const Dataset dataset = read_sequences(seg_data);
      std::vector<std::vector<FramePrediction>> predictions;
      predictions.reserve(dataset.size());
      for (const Sequence& seq : dataset) predictions.push_back(predict(params, seq));
      write_segmented_csv(dataset, predictions, seg_out);
      std::cout << "predictions written to " << seg_out << "\n";
      return 0;
    }

    if (app.got_subcommand(cmp_cmd)) {
      const NetConfig net_cfg = cmp_net.to_config();
      const TrainConfig cfg = cmp_flags.to_config();
      if (cmp_dump) {
        nlohmann::json j;
        j["command"] = "compare-loss";
        j["net"] = net_config_json(net_cfg);
        j["train"] = train_config_json(cfg);
        std::cout << j.dump(2) << "\n";
        return 0;
      }
      if (cmp_data_opt->count() == 0) throw UsageError{"compare-loss: --data is required"};
      if (cmp_prefix_opt->count() == 0) throw UsageError{"compare-loss: --out-prefix is required"};
      const Dataset dataset = read_sequences(cmp_data);
      const LossComparison cmp = compare_loss_curves(dataset, net_cfg, cfg);
      write_comparison_csv(cmp, cmp_prefix + ".csv");
      write_comparison_svg(cmp, cmp_prefix + ".svg");
      const std::size_t base90 = LossComparison::first_epoch_at(cmp.baseline, 90.0);
      const std::size_t graph90 = LossComparison::first_epoch_at(cmp.with_graph, 90.0);
      std::cout << "baseline reached 90% at epoch "
                << (base90 ? std::to_string(base90) : std::string("-"))
                << ", graph loss at epoch "
                << (graph90 ? std::to_string(graph90) : std::string("-")) << "\n";
      std::cout << "wrote " << cmp_prefix << ".csv and " << cmp_prefix << ".svg\n";
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.message << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace radarseg::cli
