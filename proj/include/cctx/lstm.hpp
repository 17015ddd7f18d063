#pragma once

#include <span>
#include <vector>

#include "cctx/rng.hpp"
#include "cctx/tape.hpp"

namespace cctx {

// Standard LSTM cell (input/forget/output gates with sigmoid, tanh candidate,
// h = o * tanh(c), no peepholes). Weights are stored input-major so a row
// vector x (1 x d_in) steps as x * w_input + h * w_hidden + bias; the gate
// blocks are column ranges in the order [input, forget, candidate, output].
struct LstmCellParams {
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  Tensor2 w_input;   // d_in x 4h
  Tensor2 w_hidden;  // h x 4h
  Tensor2 bias;      // 1 x 4h, forget block initialized to +1

  static LstmCellParams init(std::size_t input_dim, std::size_t hidden, Rng& rng);
  std::size_t param_count() const;
};

enum class LstmDirection { Forward, Backward };

// Cell parameters leased onto a tape for one pass.
struct LstmCellVals {
  Val w_input, w_hidden, bias;
  std::size_t hidden = 0;
};

LstmCellVals lease_lstm(Tape& tape, const LstmCellParams& p);

// One cell step; h_prev and c_prev are 1 x h row vectors.
struct LstmState {
  Val h, c;
};
LstmState lstm_step(Tape& tape, const LstmCellVals& cell, Val x, const LstmState& prev);

// Hidden states after each step over the inputs in the given order.
// Empty input yields an empty vector (the caller keeps the zero state).
std::vector<Val> lstm_states(Tape& tape, const LstmCellVals& cell, std::span<const Val> inputs);

// Final hidden state after consuming the whole sequence; for Backward the
// sequence is consumed in reverse. Empty input returns the zero state.
Val run_lstm(Tape& tape, const LstmCellVals& cell, std::span<const Val> inputs,
             LstmDirection direction);

}  // namespace cctx
