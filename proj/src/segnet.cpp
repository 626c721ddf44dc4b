// SPDX-License-Identifier: Apache-2.0
#include "radarseg/segnet.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "radarseg/errors.hpp"

namespace radarseg {

namespace {

constexpr std::string_view kCheckpointMagic = "radarseg-checkpoint v1";

Tensor uniform_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  Tensor t = Tensor::zeros(rows, cols);
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

DenseLayer make_dense(std::size_t in, std::size_t out, Rng& rng) {
  DenseLayer l;
  l.weight = ad::Value(uniform_matrix(in, out, rng));
  l.bias = ad::Value(Tensor::zeros(1, out));
  return l;
}

/// y = tanh(x W + b) for hidden layers; the final head layer stays linear.
ad::Value dense(const DenseLayer& layer, const ad::Value& x, bool activate) {
  ad::Value y = ad::add(ad::matmul(x, layer.weight), layer.bias);
  return activate ? ad::tanh(y) : y;
}

ad::Value run_head(const std::vector<DenseLayer>& head, const ad::Value& x) {
  ad::Value y = x;
  for (std::size_t i = 0; i < head.size(); ++i) {
    y = dense(head[i], y, /*activate=*/i + 1 < head.size());
  }
  return y;
}

Partition argmax_rows(const Tensor& logits) {
  Partition part;
  const std::size_t n = logits.rows(), k = logits.cols();
  part.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (logits.at(i, j) > logits.at(i, best)) best = j;
    }
    part.labels.push_back(static_cast<int>(best));
  }
  return part;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void NetConfig::validate() const {
  if (point_feat_dims.empty()) throw DataError("net config: point_feat_dims is empty");
  for (std::size_t w : point_feat_dims) {
    if (w < 1) throw DataError("net config: zero width in point_feat_dims");
  }
  for (std::size_t w : head_dims) {
    if (w < 1) throw DataError("net config: zero width in head_dims");
  }
  if (global_dim < 1) throw DataError("net config: global_dim must be >= 1");
  if (lstm_hidden < 1) throw DataError("net config: lstm_hidden must be >= 1");
  if (global_rounds < 1) throw DataError("net config: global_rounds must be >= 1");
}

std::size_t NetConfig::head_input_width() const {
  // round 1 concatenates [feat | F | h]; every further round appends one
  // pooled signature.
  return point_feat_width() + global_dim + lstm_hidden + (global_rounds - 1) * global_dim;
}

std::string net_config_to_json(const NetConfig& cfg) {
  nlohmann::json j;
  j["point_feat_dims"] = cfg.point_feat_dims;
  j["global_dim"] = cfg.global_dim;
  j["lstm_hidden"] = cfg.lstm_hidden;
  j["global_rounds"] = cfg.global_rounds;
  j["head_dims"] = cfg.head_dims;
  return j.dump();
}

NetConfig net_config_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
    NetConfig cfg;
    cfg.point_feat_dims = j.at("point_feat_dims").get<std::vector<std::size_t>>();
    cfg.global_dim = j.at("global_dim").get<std::size_t>();
    cfg.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
    cfg.global_rounds = j.at("global_rounds").get<std::size_t>();
    cfg.head_dims = j.at("head_dims").get<std::vector<std::size_t>>();
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad net config json: " + std::string(e.what()));
  }
}

ModelParams ModelParams::init(const NetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  ModelParams p;
  p.config = cfg;

  std::size_t width = 3;
  for (std::size_t out : cfg.point_feat_dims) {
    p.point_mlp.push_back(make_dense(width, out, rng));
    width = out;
  }

  // Projection inputs: round 1 sees the point features; later rounds see the
  // running concatenation.
  std::size_t concat_width = cfg.point_feat_width() + cfg.global_dim + cfg.lstm_hidden;
  p.global_proj.push_back(make_dense(cfg.point_feat_width(), cfg.global_dim, rng));
  for (std::size_t r = 1; r < cfg.global_rounds; ++r) {
    p.global_proj.push_back(make_dense(concat_width, cfg.global_dim, rng));
    concat_width += cfg.global_dim;
  }

  p.lstm = LstmParams::init(cfg.lstm_hidden, cfg.global_dim, rng);

  auto build_head = [&](std::size_t classes) {
    std::vector<DenseLayer> head;
    std::size_t in = cfg.head_input_width();
    for (std::size_t out : cfg.head_dims) {
      head.push_back(make_dense(in, out, rng));
      in = out;
    }
    head.push_back(make_dense(in, classes, rng));
    return head;
  };
  p.fine_head = build_head(NetConfig::fine_classes);
  p.coarse_head = build_head(NetConfig::coarse_classes);
  return p;
}

std::vector<std::pair<std::string, ad::Value>> ModelParams::named_params() const {
  std::vector<std::pair<std::string, ad::Value>> out;
  auto add_layers = [&](const std::string& prefix, const std::vector<DenseLayer>& layers) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      out.emplace_back(prefix + "." + std::to_string(i) + ".weight", layers[i].weight);
      out.emplace_back(prefix + "." + std::to_string(i) + ".bias", layers[i].bias);
    }
  };
  add_layers("point_mlp", point_mlp);
  add_layers("global_proj", global_proj);
  out.emplace_back("lstm.w_f", lstm.w_f);
  out.emplace_back("lstm.w_i", lstm.w_i);
  out.emplace_back("lstm.w_c", lstm.w_c);
  out.emplace_back("lstm.w_o", lstm.w_o);
  out.emplace_back("lstm.b_f", lstm.b_f);
  out.emplace_back("lstm.b_i", lstm.b_i);
  out.emplace_back("lstm.b_c", lstm.b_c);
  out.emplace_back("lstm.b_o", lstm.b_o);
  add_layers("fine_head", fine_head);
  add_layers("coarse_head", coarse_head);
  return out;
}

std::size_t ModelParams::param_count() const {
  std::size_t n = 0;
  for (const auto& [name, v] : named_params()) n += v.value().size();
  return n;
}

void ModelParams::zero_grads() const {
  for (const auto& [name, v] : named_params()) {
    v.node()->grad = Tensor(v.value().shape());
  }
}

ad::Value frame_points_value(const Frame& frame) {
  const std::size_t n = frame.points.size();
  if (n == 0) throw DataError("frame " + std::to_string(frame.frame_index) + " is empty");
  Vec3 centroid;
  for (const LabeledPoint& p : frame.points) centroid = centroid + p.position;
  centroid = centroid * (1.0 / static_cast<double>(n));
  Tensor t = Tensor::zeros(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 q = frame.points[i].position - centroid;
    if (!q.finite()) {
      throw DataError("frame " + std::to_string(frame.frame_index) +
                      " has a non-finite position");
    }
    t.at(i, 0) = q.x;
    t.at(i, 1) = q.y;
    t.at(i, 2) = q.z;
  }
  return ad::Value(std::move(t));
}

std::pair<ad::Value, ad::Value> frame_global_feature(const ModelParams& params,
                                                     const ad::Value& points) {
  if (points.value().rank() != 2 || points.value().cols() != 3 ||
      points.value().rows() == 0) {
    throw ShapeError("frame_global_feature: points must be [n x 3] with n >= 1, got " +
                     points.value().shape_str());
  }
  ad::Value feat = points;
  for (const DenseLayer& layer : params.point_mlp) {
    feat = dense(layer, feat, /*activate=*/true);
  }
  const ad::Value projected = dense(params.global_proj[0], feat, /*activate=*/true);
  return {feat, ad::max_over_rows(projected)};
}

std::vector<FrameOutput> forward(const ModelParams& params, const Sequence& seq) {
  if (seq.frames.empty()) throw DataError("forward: empty sequence");
  std::vector<FrameOutput> outputs;
  outputs.reserve(seq.frames.size());
  LstmState state = lstm_initial_state(params.config.lstm_hidden);
  for (const Frame& frame : seq.frames) {
    const std::size_t n = frame.points.size();
    const ad::Value points = frame_points_value(frame);
    auto [feat, signature] = frame_global_feature(params, points);

    state = lstm_step(params.lstm, state, ad::transpose(signature));
    const ad::Value h_row = ad::transpose(state.h);

    ad::Value x = ad::concat(feat, ad::tile_rows(signature, n), 1);
    x = ad::concat(x, ad::tile_rows(h_row, n), 1);
    for (std::size_t r = 1; r < params.config.global_rounds; ++r) {
      const ad::Value pooled =
          ad::max_over_rows(dense(params.global_proj[r], x, /*activate=*/true));
      x = ad::concat(x, ad::tile_rows(pooled, n), 1);
    }

    FrameOutput out;
    out.fine_logits = run_head(params.fine_head, x);
    out.coarse_logits = run_head(params.coarse_head, x);
    outputs.push_back(std::move(out));
  }
  return outputs;
}

std::vector<FramePrediction> predict(const ModelParams& params, const Sequence& seq) {
  const auto outputs = forward(params, seq);
  std::vector<FramePrediction> preds;
  preds.reserve(outputs.size());
  for (const FrameOutput& out : outputs) {
    preds.push_back(FramePrediction{argmax_rows(out.fine_logits.value()),
                                    argmax_rows(out.coarse_logits.value())});
  }
  return preds;
}

void save_model(const ModelParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << kCheckpointMagic << "\n";
  out << "config " << net_config_to_json(params.config) << "\n";
  const auto named = params.named_params();
  out << "tensors " << named.size() << "\n";
  for (const auto& [name, value] : named) {
    const Tensor& t = value.value();
    out << "tensor " << name;
    out << " " << t.rank();
    for (std::size_t d : t.shape()) out << " " << d;
    out << "\n";
    const auto data = t.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (i) out << ' ';
      out << format_double(data[i]);
    }
    out << "\n";
  }
  out << "end\n";
  if (!out) throw IoError("write to '" + path + "' failed");
}

ModelParams load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() {
    if (!std::getline(in, line)) throw ParseError("unexpected end of checkpoint", line_no + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };

  next_line();
  if (line != kCheckpointMagic) {
    throw ParseError("not a checkpoint file (bad magic '" + line + "')", line_no);
  }
  next_line();
  if (line.rfind("config ", 0) != 0) throw ParseError("expected config line", line_no);
  const NetConfig cfg = net_config_from_json(line.substr(7));
  ModelParams params = ModelParams::init(cfg, /*seed=*/0);
  const auto named = params.named_params();

  next_line();
  if (line.rfind("tensors ", 0) != 0) throw ParseError("expected tensor count", line_no);
  const std::size_t count = std::strtoull(line.c_str() + 8, nullptr, 10);
  if (count != named.size()) {
    throw ParseError("checkpoint holds " + std::to_string(count) + " tensors, model needs " +
                     std::to_string(named.size()), line_no);
  }

  for (const auto& [name, value] : named) {
    next_line();
    std::istringstream head(line);
    std::string tag, got_name;
    std::size_t rank = 0;
    head >> tag >> got_name >> rank;
    if (tag != "tensor" || head.fail()) throw ParseError("expected tensor header", line_no);
    if (got_name != name) {
      throw ParseError("tensor '" + got_name + "' out of order, expected '" + name + "'",
                       line_no);
    }
    std::vector<std::size_t> shape(rank);
    for (std::size_t i = 0; i < rank; ++i) head >> shape[i];
    if (head.fail()) throw ParseError("bad shape for tensor '" + name + "'", line_no);
    if (shape != value.value().shape()) {
      throw ParseError("tensor '" + name + "' has wrong shape", line_no);
    }
    next_line();
    Tensor t(shape);
    const char* cursor = line.c_str();
    for (std::size_t i = 0; i < t.size(); ++i) {
      char* end = nullptr;
      t[i] = std::strtod(cursor, &end);
      if (end == cursor) {
        throw ParseError("tensor '" + name + "' has too few values", line_no);
      }
      cursor = end;
    }
    value.node()->value = std::move(t);
  }
  next_line();
  if (line != "end") throw ParseError("missing end marker", line_no);
  return params;
}

}  // namespace radarseg
