// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "radarseg/errors.hpp"
#include "radarseg/lstm.hpp"
#include "testutil.hpp"

using namespace radarseg;
using testutil::BuiltGraph;
using testutil::FlatReader;
using testutil::ScalarState;

namespace {

ad::Value column_value(const std::vector<double>& v) {
  return ad::Value(Tensor::column(v));
}

std::vector<double> column_data(const ad::Value& v) {
  return {v.value().data().begin(), v.value().data().end()};
}

}  // namespace

TEST_SUITE("lstm") {

TEST_CASE("all-zero parameters: gates sit at one half") {
  const LstmParams p = LstmParams::zeros(3, 2);
  const LstmState s0 = lstm_initial_state(3);
  const LstmState s1 = lstm_step(p, s0, column_value({0.4, -1.2}));
  for (double c : s1.c.value().data()) CHECK(c == 0.0);
  for (double h : s1.h.value().data()) CHECK(h == 0.0);

  // With a non-zero previous memory, the half-open forget gate halves it.
  LstmState with_memory = s0;
  with_memory.c = column_value({0.8, -0.4, 0.2});
  const LstmState s2 = lstm_step(p, with_memory, column_value({0.4, -1.2}));
  CHECK(s2.c.value().at(0, 0) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(s2.c.value().at(1, 0) == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK(s2.c.value().at(2, 0) == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("five random steps match the scalar reference") {
  Rng rng(123);
  LstmParams p = LstmParams::init(4, 3, rng);
  for (ad::Value* bias : {&p.b_f, &p.b_i, &p.b_c, &p.b_o}) {
    for (double& v : bias->value_mut().data()) v = rng.uniform(-0.5, 0.5);
  }

  LstmState state = lstm_initial_state(4);
  ScalarState ref{std::vector<double>(4, 0.0), std::vector<double>(4, 0.0)};
  for (int step = 0; step < 5; ++step) {
    std::vector<double> x(3);
    for (double& v : x) v = rng.uniform(-1, 1);
    state = lstm_step(p, state, column_value(x));
    ref = testutil::scalar_lstm_step(p, ref, x);
    const auto h = column_data(state.h);
    const auto c = column_data(state.c);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(std::fabs(h[i] - ref.h[i]) < 1e-12);
      CHECK(std::fabs(c[i] - ref.c[i]) < 1e-12);
    }
  }
}

TEST_CASE("gate ranges over random parameters") {
  Rng rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    const LstmParams p = LstmParams::init(5, 4, rng);
    LstmState state = lstm_initial_state(5);
    for (int step = 0; step < 3; ++step) {
      std::vector<double> x(4);
      for (double& v : x) v = rng.uniform(-2, 2);
      state = lstm_step(p, state, column_value(x));
      for (double h : state.h.value().data()) CHECK(std::fabs(h) < 1.0);
    }
  }
}

TEST_CASE("run_sequence: one input equals one step") {
  Rng rng(7);
  const LstmParams p = LstmParams::init(3, 2, rng);
  const LstmState s0 = lstm_initial_state(3);
  const ad::Value x = column_value({0.3, -0.7});
  const std::vector<ad::Value> inputs{x};
  const auto states = run_sequence(p, s0, inputs);
  REQUIRE(states.size() == 1);
  const LstmState direct = lstm_step(p, s0, x);
  CHECK(states[0].h.value() == direct.h.value());
  CHECK(states[0].c.value() == direct.c.value());
}

TEST_CASE("run_sequence rejects empty input") {
  const LstmParams p = LstmParams::zeros(3, 2);
  const std::vector<ad::Value> empty;
  CHECK_THROWS_AS(run_sequence(p, lstm_initial_state(3), empty), DataError);
}

TEST_CASE("state threading: split runs compose") {
  Rng rng(42);
  const LstmParams p = LstmParams::init(4, 2, rng);
  std::vector<ad::Value> inputs;
  for (int i = 0; i < 6; ++i) {
    inputs.push_back(column_value({rng.uniform(-1, 1), rng.uniform(-1, 1)}));
  }
  const auto full = run_sequence(p, lstm_initial_state(4), inputs);
  const auto head = run_sequence(p, lstm_initial_state(4),
                                 std::span<const ad::Value>(inputs).first(3));
  const auto tail =
      run_sequence(p, head.back(), std::span<const ad::Value>(inputs).subspan(3));
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(std::fabs(full.back().h.value()[i] - tail.back().h.value()[i]) < 1e-12);
    CHECK(std::fabs(full.back().c.value()[i] - tail.back().c.value()[i]) < 1e-12);
  }
}

TEST_CASE("memory hold: saturated forget gate carries c almost unchanged") {
  // b_f = +10 forces f ~ 1, b_i = -10 forces i ~ 0; weights are scaled down
  // so the gate pre-activations stay saturated.
  Rng rng(11);
  LstmParams p = LstmParams::init(4, 3, rng);
  for (ad::Value* w : {&p.w_f, &p.w_i, &p.w_c, &p.w_o}) {
    for (double& v : w->value_mut().data()) v *= 0.1;
  }
  for (double& v : p.b_f.value_mut().data()) v = 10.0;
  for (double& v : p.b_i.value_mut().data()) v = -10.0;

  LstmState state = lstm_initial_state(4);
  const std::vector<double> c0{0.5, -0.25, 0.1, 0.4};
  state.c = column_value(c0);
  for (int step = 0; step < 20; ++step) {
    std::vector<double> x(3);
    for (double& v : x) v = rng.uniform(-1, 1);
    state = lstm_step(p, state, column_value(x));
  }
  double drift = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    drift = std::max(drift, std::fabs(state.c.value()[i] - c0[i]));
  }
  CHECK(drift < 1e-3);
}

TEST_CASE("exact memory-hold identity when f = 1 and i = 0") {
  // Force the gates analytically: zero weights, huge biases.
  LstmParams p = LstmParams::zeros(2, 1);
  for (double& v : p.b_f.value_mut().data()) v = 1e4;  // sigmoid == 1 in doubles
  for (double& v : p.b_i.value_mut().data()) v = -1e4;
  LstmState state = lstm_initial_state(2);
  state.c = column_value({0.75, -0.5});
  const LstmState next = lstm_step(p, state, column_value({2.0}));
  CHECK(next.c.value()[0] == 0.75);
  CHECK(next.c.value()[1] == -0.5);
}

TEST_CASE("gradients through a four-step unroll match finite differences") {
  const std::size_t h = 3, d = 2, steps = 4;
  Rng rng(300);
  const Tensor proj = Tensor::matrix(h, 1, testutil::random_vector(h, rng));

  auto build = [&](const std::vector<double>& x) {
    FlatReader in(x);
    LstmParams p;
    p.hidden = h;
    p.input = d;
    p.w_f = in.take(h, h + d);
    p.w_i = in.take(h, h + d);
    p.w_c = in.take(h, h + d);
    p.w_o = in.take(h, h + d);
    p.b_f = in.take(h, 1);
    p.b_i = in.take(h, 1);
    p.b_c = in.take(h, 1);
    p.b_o = in.take(h, 1);
    std::vector<ad::Value> inputs;
    for (std::size_t s = 0; s < steps; ++s) inputs.push_back(in.take(d, 1));
    const auto states = run_sequence(p, lstm_initial_state(h), inputs);
    const ad::Value loss = ad::sum_all(ad::mul(states.back().h, ad::Value(proj)));
    std::vector<ad::Value> leaves{p.w_f, p.w_i, p.w_c, p.w_o,
                                  p.b_f, p.b_i, p.b_c, p.b_o};
    leaves.insert(leaves.end(), inputs.begin(), inputs.end());
    return BuiltGraph{loss, leaves};
  };
  const std::size_t n_inputs = 4 * h * (h + d) + 4 * h + steps * d;
  const auto x0 = testutil::random_vector(n_inputs, rng, -0.8, 0.8);
  const auto result = testutil::grad_check(build, x0);
  CHECK_MESSAGE(result.ok, result.detail);
}

}  // TEST_SUITE
