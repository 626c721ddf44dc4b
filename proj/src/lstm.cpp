// SPDX-License-Identifier: Apache-2.0
#include "radarseg/lstm.hpp"

#include <cmath>

#include "radarseg/errors.hpp"

namespace radarseg {

namespace {

Tensor uniform_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  Tensor t = Tensor::zeros(rows, cols);
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

LstmParams LstmParams::init(std::size_t hidden, std::size_t input, Rng& rng) {
  LstmParams p;
  p.hidden = hidden;
  p.input = input;
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden + input));
  p.w_f = ad::Value(uniform_matrix(hidden, hidden + input, bound, rng));
  p.w_i = ad::Value(uniform_matrix(hidden, hidden + input, bound, rng));
  p.w_c = ad::Value(uniform_matrix(hidden, hidden + input, bound, rng));
  p.w_o = ad::Value(uniform_matrix(hidden, hidden + input, bound, rng));
  p.b_f = ad::Value(Tensor::zeros(hidden, 1));
  p.b_i = ad::Value(Tensor::zeros(hidden, 1));
  p.b_c = ad::Value(Tensor::zeros(hidden, 1));
  p.b_o = ad::Value(Tensor::zeros(hidden, 1));
  return p;
}

LstmParams LstmParams::zeros(std::size_t hidden, std::size_t input) {
  LstmParams p;
  p.hidden = hidden;
  p.input = input;
  p.w_f = ad::Value(Tensor::zeros(hidden, hidden + input));
  p.w_i = ad::Value(Tensor::zeros(hidden, hidden + input));
  p.w_c = ad::Value(Tensor::zeros(hidden, hidden + input));
  p.w_o = ad::Value(Tensor::zeros(hidden, hidden + input));
  p.b_f = ad::Value(Tensor::zeros(hidden, 1));
  p.b_i = ad::Value(Tensor::zeros(hidden, 1));
  p.b_c = ad::Value(Tensor::zeros(hidden, 1));
  p.b_o = ad::Value(Tensor::zeros(hidden, 1));
  return p;
}

LstmState lstm_initial_state(std::size_t hidden) {
  LstmState s;
  s.h = ad::Value(Tensor::zeros(hidden, 1));
  s.c = ad::Value(Tensor::zeros(hidden, 1));
  return s;
}

LstmState lstm_step(const LstmParams& params, const LstmState& prev, const ad::Value& x) {
  if (x.value().rank() != 2 || x.value().cols() != 1 ||
      x.value().rows() != params.input) {
    throw ShapeError("lstm_step: input must be [" + std::to_string(params.input) +
                     "x1], got " + x.value().shape_str());
  }
  if (prev.h.value().rows() != params.hidden || prev.c.value().rows() != params.hidden) {
    throw ShapeError("lstm_step: state size does not match hidden size " +
                     std::to_string(params.hidden));
  }
  const ad::Value hx = ad::concat(prev.h, x, 0);
  const ad::Value f = ad::sigmoid(ad::add(ad::matmul(params.w_f, hx), params.b_f));
  const ad::Value i = ad::sigmoid(ad::add(ad::matmul(params.w_i, hx), params.b_i));
  const ad::Value c_cand = ad::tanh(ad::add(ad::matmul(params.w_c, hx), params.b_c));
  LstmState next;
  next.c = ad::add(ad::mul(f, prev.c), ad::mul(i, c_cand));
  const ad::Value o = ad::sigmoid(ad::add(ad::matmul(params.w_o, hx), params.b_o));
  next.h = ad::mul(o, ad::tanh(next.c));
  return next;
}

std::vector<LstmState> run_sequence(const LstmParams& params, const LstmState& initial,
                                    std::span<const ad::Value> inputs) {
  if (inputs.empty()) throw DataError("run_sequence: empty input list");
  std::vector<LstmState> states;
  states.reserve(inputs.size());
  LstmState state = initial;
  for (const ad::Value& x : inputs) {
    state = lstm_step(params, state, x);
    states.push_back(state);
  }
  return states;
}

}  // namespace radarseg
