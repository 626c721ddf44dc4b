// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "radarseg/autodiff.hpp"
#include "radarseg/rng.hpp"

namespace radarseg {

/// Gate parameters of the recurrent cell. Each gate matrix multiplies the
/// concatenated [h_prev, x_t] column, so all four share shape [h x (h+d)];
/// biases are [h x 1] columns.
struct LstmParams {
  ad::Value w_f, w_i, w_c, w_o;
  ad::Value b_f, b_i, b_c, b_o;
  std::size_t hidden = 0;  // h
  std::size_t input = 0;   // d

  /// Uniform fan-in init in [-1/sqrt(h+d), +1/sqrt(h+d)]; biases zero.
  static LstmParams init(std::size_t hidden, std::size_t input, Rng& rng);
  static LstmParams zeros(std::size_t hidden, std::size_t input);
};

/// Recurrent state: h_t is the cell output, c_t the long-term memory.
struct LstmState {
  ad::Value h;  // [h x 1]
  ad::Value c;  // [h x 1]
};

/// Zero state; the start of every sequence.
LstmState lstm_initial_state(std::size_t hidden);

/// One step of the gated cell:
///   f = sigmoid(W_f [h_prev, x] + b_f)    forget gate
///   i = sigmoid(W_i [h_prev, x] + b_i)    input gate
///   c_cand = tanh(W_c [h_prev, x] + b_c)
///   c = f * c_prev + i * c_cand           (f == 1, i == 0 holds c exactly)
///   o = sigmoid(W_o [h_prev, x] + b_o)
///   h = o * tanh(c)
/// Concatenation order is [h_prev, x].
LstmState lstm_step(const LstmParams& params, const LstmState& prev, const ad::Value& x);

/// Left fold of lstm_step over the inputs; one state per input.
std::vector<LstmState> run_sequence(const LstmParams& params, const LstmState& initial,
                                    std::span<const ad::Value> inputs);

}  // namespace radarseg
