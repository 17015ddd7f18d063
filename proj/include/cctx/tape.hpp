#pragma once

#include <cstdint>
#include <vector>

#include "cctx/tensor.hpp"

namespace cctx {

// Handle to a tensor recorded on a Tape.
struct Val {
  int id = -1;
  bool valid() const { return id >= 0; }
};

enum class Precision : std::uint8_t { F64 = 0, F32 = 1 };

// Eager reverse-mode tape over Tensor2 values. Every op computes its output
// immediately and records what backward() needs. A tape is single-owner and
// must not be shared across concurrent passes; run one tape per pass over
// shared read-only parameters and merge gradients at step boundaries.
//
// In F32 mode every op output and every completed gradient is rounded to
// float32 before further use, so results track a narrow-float implementation
// while the arithmetic itself stays in doubles.
class Tape {
 public:
  explicit Tape(Precision prec = Precision::F64) : prec_(prec) {}

  Precision precision() const { return prec_; }

  // Leaves. input() copies the tensor in; param() does the same but is the
  // conventional entry point for tensors whose gradient will be read back.
  Val input(Tensor2 t);
  Val param(const Tensor2& t) { return input(t); }
  Val zeros(std::size_t rows, std::size_t cols) { return input(Tensor2(rows, cols)); }

  // Primitive ops.
  Val matmul(Val a, Val b);
  Val add(Val a, Val b);
  Val sub(Val a, Val b);
  Val mul(Val a, Val b);  // elementwise
  Val sigmoid(Val a);
  Val tanh(Val a);
  Val relu(Val a);
  Val log_sigmoid(Val a);
  Val concat_cols(Val a, Val b);
  Val slice_cols(Val a, std::size_t start, std::size_t len);
  Val gather_row(Val table, std::size_t index);
  Val add_scalar(Val a, double c);
  Val scale(Val a, double c);
  Val sum_all(Val a);           // -> 1x1
  Val log_softmax_row(Val a);   // per-row log softmax

  const Tensor2& value(Val v) const { return vals_[check(v)]; }
  double scalar(Val v) const;

  // Gradient of the last backward() loss w.r.t. the value node v.
  // Zero-shaped tensor if the node was never reached.
  const Tensor2& grad(Val v) const;

  // Reverse pass from a 1x1 loss node. Clears previous gradients.
  void backward(Val loss);

  void clear();
  std::size_t size() const { return nodes_.size(); }

  // Checkpoint the node count, then drop everything recorded after it.
  // Lets inference reuse one parameter lease across many small passes.
  std::size_t mark() const { return nodes_.size(); }
  void rewind(std::size_t m);

 private:
  enum class Op : std::uint8_t {
    Leaf,
    Matmul,
    Add,
    Sub,
    Mul,
    Sigmoid,
    Tanh,
    Relu,
    LogSigmoid,
    ConcatCols,
    SliceCols,
    GatherRow,
    AddScalar,
    Scale,
    SumAll,
    LogSoftmaxRow,
  };

  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    std::size_t i0 = 0;  // slice start / gather row
    double c = 0.0;      // scalar operand
  };

  int check(Val v) const;
  Val push(Op op, Tensor2 out, int a = -1, int b = -1, std::size_t i0 = 0, double c = 0.0);
  void round_f32(Tensor2& t) const;

  Precision prec_;
  std::vector<Node> nodes_;
  std::vector<Tensor2> vals_;
  std::vector<Tensor2> grads_;
  Tensor2 empty_grad_;
};

}  // namespace cctx
