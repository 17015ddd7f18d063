#include "cctx/lstm.hpp"

#include <cmath>
#include <stdexcept>

namespace cctx {

namespace {

void fill_uniform(Tensor2& t, double lo, double hi, Rng& rng) {
  for (double& x : t.data) x = rng.uniform(lo, hi);
}

}  // namespace

LstmCellParams LstmCellParams::init(std::size_t input_dim, std::size_t hidden, Rng& rng) {
  LstmCellParams p;
  p.input_dim = input_dim;
  p.hidden = hidden;
  p.w_input = Tensor2(input_dim, 4 * hidden);
  p.w_hidden = Tensor2(hidden, 4 * hidden);
  p.bias = Tensor2(1, 4 * hidden);
  const double in_bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double hid_bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  fill_uniform(p.w_input, -in_bound, in_bound, rng);
  fill_uniform(p.w_hidden, -hid_bound, hid_bound, rng);
  for (std::size_t j = hidden; j < 2 * hidden; ++j) p.bias.data[j] = 1.0;  // forget gate
  return p;
}

std::size_t LstmCellParams::param_count() const {
  return w_input.numel() + w_hidden.numel() + bias.numel();
}

LstmCellVals lease_lstm(Tape& tape, const LstmCellParams& p) {
  if (p.w_input.rows != p.input_dim || p.w_input.cols != 4 * p.hidden ||
      p.w_hidden.rows != p.hidden || p.bias.cols != 4 * p.hidden) {
    throw std::invalid_argument("lease_lstm: inconsistent cell parameter shapes");
  }
  return LstmCellVals{tape.param(p.w_input), tape.param(p.w_hidden), tape.param(p.bias), p.hidden};
}

LstmState lstm_step(Tape& tape, const LstmCellVals& cell, Val x, const LstmState& prev) {
  const std::size_t h = cell.hidden;
  Val pre = tape.add(tape.add(tape.matmul(x, cell.w_input), tape.matmul(prev.h, cell.w_hidden)),
                     cell.bias);
  Val ig = tape.sigmoid(tape.slice_cols(pre, 0, h));
  Val fg = tape.sigmoid(tape.slice_cols(pre, h, h));
  Val gg = tape.tanh(tape.slice_cols(pre, 2 * h, h));
  Val og = tape.sigmoid(tape.slice_cols(pre, 3 * h, h));
  Val c = tape.add(tape.mul(fg, prev.c), tape.mul(ig, gg));
  Val hv = tape.mul(og, tape.tanh(c));
  return LstmState{hv, c};
}

std::vector<Val> lstm_states(Tape& tape, const LstmCellVals& cell, std::span<const Val> inputs) {
  std::vector<Val> states;
  states.reserve(inputs.size());
  LstmState st{tape.zeros(1, cell.hidden), tape.zeros(1, cell.hidden)};
  for (Val x : inputs) {
    st = lstm_step(tape, cell, x, st);
    states.push_back(st.h);
  }
  return states;
}

Val run_lstm(Tape& tape, const LstmCellVals& cell, std::span<const Val> inputs,
             LstmDirection direction) {
  if (inputs.empty()) return tape.zeros(1, cell.hidden);
  LstmState st{tape.zeros(1, cell.hidden), tape.zeros(1, cell.hidden)};
  if (direction == LstmDirection::Forward) {
    for (Val x : inputs) st = lstm_step(tape, cell, x, st);
  } else {
    for (std::size_t i = inputs.size(); i-- > 0;) st = lstm_step(tape, cell, inputs[i], st);
  }
  return st.h;
}

}  // namespace cctx
