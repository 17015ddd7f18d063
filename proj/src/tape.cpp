#include "cctx/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cctx {

namespace {

double sigmoid_fn(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(sigmoid(x)) without overflow on either tail.
double log_sigmoid_fn(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

}  // namespace

int Tape::check(Val v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw std::logic_error("Tape: value handle does not belong to this tape");
  }
  return v.id;
}

void Tape::round_f32(Tensor2& t) const {
  if (prec_ != Precision::F32) return;
  for (double& x : t.data) x = static_cast<double>(static_cast<float>(x));
}

Val Tape::push(Op op, Tensor2 out, int a, int b, std::size_t i0, double c) {
  round_f32(out);
  nodes_.push_back(Node{op, a, b, i0, c});
  vals_.push_back(std::move(out));
  return Val{static_cast<int>(nodes_.size()) - 1};
}

Val Tape::input(Tensor2 t) { return push(Op::Leaf, std::move(t)); }

Val Tape::matmul(Val av, Val bv) {
  const Tensor2& a = vals_[check(av)];
  const Tensor2& b = vals_[check(bv)];
  if (a.cols != b.rows) {
    throw std::invalid_argument("matmul: inner dimensions differ, " + a.shape_str() + " x " +
                                b.shape_str());
  }
  Tensor2 out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[i * a.cols];
    double* orow = &out.data[i * b.cols];
    for (std::size_t p = 0; p < a.cols; ++p) {
      const double s = arow[p];
      if (s == 0.0) continue;
      const double* brow = &b.data[p * b.cols];
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += s * brow[j];
    }
  }
  return push(Op::Matmul, std::move(out), av.id, bv.id);
}

Val Tape::add(Val av, Val bv) {
  const Tensor2& a = vals_[check(av)];
  const Tensor2& b = vals_[check(bv)];
  if (!a.same_shape(b)) {
    throw std::invalid_argument("add: shape mismatch, " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor2 out(a.rows, a.cols);
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = a.data[i] + b.data[i];
  return push(Op::Add, std::move(out), av.id, bv.id);
}

Val Tape::sub(Val av, Val bv) {
  const Tensor2& a = vals_[check(av)];
  const Tensor2& b = vals_[check(bv)];
  if (!a.same_shape(b)) {
    throw std::invalid_argument("sub: shape mismatch, " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor2 out(a.rows, a.cols);
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = a.data[i] - b.data[i];
  return push(Op::Sub, std::move(out), av.id, bv.id);
}

Val Tape::mul(Val av, Val bv) {
  const Tensor2& a = vals_[check(av)];
  const Tensor2& b = vals_[check(bv)];
  if (!a.same_shape(b)) {
    throw std::invalid_argument("mul: shape mismatch, " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor2 out(a.rows, a.cols);
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = a.data[i] * b.data[i];
  return push(Op::Mul, std::move(out), av.id, bv.id);
}

Val Tape::sigmoid(Val av) {
  const Tensor2& a = vals_[check(av)];
  Tensor2 out(a.rows, a.cols);
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = sigmoid_fn(a.data[i]);
  return push(Op::Sigmoid, std::move(out), av.id);
}

Val Tape::tanh(Val av) {
  const Tensor2& a = vals_[check(av)];
  Tensor2 out(a.rows, a.cols);
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = std::tanh(a.data[i]);
  return push(Op::Tanh, std::move(out), av.id);
}

Val Tape::relu(Val av) {
  const Tensor2& a = vals_[check(av)];
  Tensor2 out(a.rows, a.cols);
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = a.data[i] > 0.0 ? a.data[i] : 0.0;
  return push(Op::Relu, std::move(out), av.id);
}

Val Tape::log_sigmoid(Val av) {
  const Tensor2& a = vals_[check(av)];
  Tensor2 out(a.rows, a.cols);
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = log_sigmoid_fn(a.data[i]);
  return push(Op::LogSigmoid, std::move(out), av.id);
}

Val Tape::concat_cols(Val av, Val bv) {
  const Tensor2& a = vals_[check(av)];
  const Tensor2& b = vals_[check(bv)];
  if (a.rows != b.rows) {
    throw std::invalid_argument("concat_cols: row counts differ, " + a.shape_str() + " vs " +
                                b.shape_str());
  }
  Tensor2 out(a.rows, a.cols + b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < a.cols; ++j) out.at(i, j) = a.at(i, j);
    for (std::size_t j = 0; j < b.cols; ++j) out.at(i, a.cols + j) = b.at(i, j);
  }
  return push(Op::ConcatCols, std::move(out), av.id, bv.id);
}

Val Tape::slice_cols(Val av, std::size_t start, std::size_t len) {
  const Tensor2& a = vals_[check(av)];
  if (start + len > a.cols) {
    throw std::out_of_range("slice_cols: [" + std::to_string(start) + ", " +
                            std::to_string(start + len) + ") exceeds " + a.shape_str());
  }
  Tensor2 out(a.rows, len);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < len; ++j) out.at(i, j) = a.at(i, start + j);
  }
  return push(Op::SliceCols, std::move(out), av.id, -1, start);
}

Val Tape::gather_row(Val tv, std::size_t index) {
  const Tensor2& t = vals_[check(tv)];
  if (index >= t.rows) {
    throw std::out_of_range("gather_row: index " + std::to_string(index) + " out of range for " +
                            t.shape_str());
  }
  Tensor2 out(1, t.cols);
  for (std::size_t j = 0; j < t.cols; ++j) out.data[j] = t.at(index, j);
  return push(Op::GatherRow, std::move(out), tv.id, -1, index);
}

Val Tape::add_scalar(Val av, double c) {
  const Tensor2& a = vals_[check(av)];
  Tensor2 out(a.rows, a.cols);
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = a.data[i] + c;
  return push(Op::AddScalar, std::move(out), av.id, -1, 0, c);
}

Val Tape::scale(Val av, double c) {
  const Tensor2& a = vals_[check(av)];
  Tensor2 out(a.rows, a.cols);
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = a.data[i] * c;
  return push(Op::Scale, std::move(out), av.id, -1, 0, c);
}

Val Tape::sum_all(Val av) {
  const Tensor2& a = vals_[check(av)];
  double s = 0.0;
  for (double x : a.data) s += x;
  Tensor2 out(1, 1);
  out.data[0] = s;
  return push(Op::SumAll, std::move(out), av.id);
}

Val Tape::log_softmax_row(Val av) {
  const Tensor2& a = vals_[check(av)];
  Tensor2 out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* row = &a.data[i * a.cols];
    double mx = row[0];
    for (std::size_t j = 1; j < a.cols; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) z += std::exp(row[j] - mx);
    const double lz = mx + std::log(z);
    for (std::size_t j = 0; j < a.cols; ++j) out.data[i * a.cols + j] = row[j] - lz;
  }
  return push(Op::LogSoftmaxRow, std::move(out), av.id);
}

double Tape::scalar(Val v) const {
  const Tensor2& t = value(v);
  if (t.numel() != 1) {
    throw std::logic_error("scalar: value is " + t.shape_str() + ", expected 1x1");
  }
  return t.data[0];
}

const Tensor2& Tape::grad(Val v) const {
  const int id = check(v);
  if (static_cast<std::size_t>(id) >= grads_.size()) return empty_grad_;
  return grads_[id];
}

void Tape::backward(Val loss) {
  const int lid = check(loss);
  if (vals_[lid].numel() != 1) {
    throw std::logic_error("backward: loss must be 1x1, got " + vals_[lid].shape_str());
  }
  grads_.assign(nodes_.size(), Tensor2());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    grads_[i] = Tensor2(vals_[i].rows, vals_[i].cols);
  }
  grads_[lid].data[0] = 1.0;

  for (int i = lid; i >= 0; --i) {
    const Node& n = nodes_[i];
    if (n.op == Op::Leaf) continue;
    round_f32(grads_[i]);
    const Tensor2& g = grads_[i];
    bool any = false;
    for (double x : g.data) {
      if (x != 0.0) {
        any = true;
        break;
      }
    }
    if (!any) continue;

    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::Matmul: {
        const Tensor2& a = vals_[n.a];
        const Tensor2& b = vals_[n.b];
        Tensor2& ga = grads_[n.a];
        Tensor2& gb = grads_[n.b];
        // dA[i,p] += sum_j g[i,j] * B[p,j]
        for (std::size_t r = 0; r < a.rows; ++r) {
          const double* grow = &g.data[r * b.cols];
          double* garow = &ga.data[r * a.cols];
          for (std::size_t p = 0; p < a.cols; ++p) {
            const double* brow = &b.data[p * b.cols];
            double acc = 0.0;
            for (std::size_t j = 0; j < b.cols; ++j) acc += grow[j] * brow[j];
            garow[p] += acc;
          }
        }
        // dB[p,j] += sum_i A[i,p] * g[i,j]
        for (std::size_t r = 0; r < a.rows; ++r) {
          const double* arow = &a.data[r * a.cols];
          const double* grow = &g.data[r * b.cols];
          for (std::size_t p = 0; p < a.cols; ++p) {
            const double s = arow[p];
            if (s == 0.0) continue;
            double* gbrow = &gb.data[p * b.cols];
            for (std::size_t j = 0; j < b.cols; ++j) gbrow[j] += s * grow[j];
          }
        }
        break;
      }
      case Op::Add: {
        Tensor2& ga = grads_[n.a];
        Tensor2& gb = grads_[n.b];
        for (std::size_t k = 0; k < g.numel(); ++k) {
          ga.data[k] += g.data[k];
          gb.data[k] += g.data[k];
        }
        break;
      }
      case Op::Sub: {
        Tensor2& ga = grads_[n.a];
        Tensor2& gb = grads_[n.b];
        for (std::size_t k = 0; k < g.numel(); ++k) {
          ga.data[k] += g.data[k];
          gb.data[k] -= g.data[k];
        }
        break;
      }
      case Op::Mul: {
        const Tensor2& a = vals_[n.a];
        const Tensor2& b = vals_[n.b];
        Tensor2& ga = grads_[n.a];
        Tensor2& gb = grads_[n.b];
        for (std::size_t k = 0; k < g.numel(); ++k) {
          ga.data[k] += g.data[k] * b.data[k];
          gb.data[k] += g.data[k] * a.data[k];
        }
        break;
      }
      case Op::Sigmoid: {
        const Tensor2& y = vals_[i];
        Tensor2& ga = grads_[n.a];
        for (std::size_t k = 0; k < g.numel(); ++k) {
          ga.data[k] += g.data[k] * y.data[k] * (1.0 - y.data[k]);
        }
        break;
      }
      case Op::Tanh: {
        const Tensor2& y = vals_[i];
        Tensor2& ga = grads_[n.a];
        for (std::size_t k = 0; k < g.numel(); ++k) {
          ga.data[k] += g.data[k] * (1.0 - y.data[k] * y.data[k]);
        }
        break;
      }
      case Op::Relu: {
        const Tensor2& y = vals_[i];
        Tensor2& ga = grads_[n.a];
        for (std::size_t k = 0; k < g.numel(); ++k) {
          if (y.data[k] > 0.0) ga.data[k] += g.data[k];
        }
        break;
      }
      case Op::LogSigmoid: {
        // d/dx log(sigmoid(x)) = 1 - sigmoid(x) = 1 - exp(y)
        const Tensor2& y = vals_[i];
        Tensor2& ga = grads_[n.a];
        for (std::size_t k = 0; k < g.numel(); ++k) {
          ga.data[k] += g.data[k] * (1.0 - std::exp(y.data[k]));
        }
        break;
      }
      case Op::ConcatCols: {
        const Tensor2& a = vals_[n.a];
        const Tensor2& b = vals_[n.b];
        Tensor2& ga = grads_[n.a];
        Tensor2& gb = grads_[n.b];
        for (std::size_t r = 0; r < a.rows; ++r) {
          for (std::size_t j = 0; j < a.cols; ++j) ga.at(r, j) += g.at(r, j);
          for (std::size_t j = 0; j < b.cols; ++j) gb.at(r, j) += g.at(r, a.cols + j);
        }
        break;
      }
      case Op::SliceCols: {
        Tensor2& ga = grads_[n.a];
        for (std::size_t r = 0; r < g.rows; ++r) {
          for (std::size_t j = 0; j < g.cols; ++j) ga.at(r, n.i0 + j) += g.at(r, j);
        }
        break;
      }
      case Op::GatherRow: {
        Tensor2& ga = grads_[n.a];
        for (std::size_t j = 0; j < g.cols; ++j) ga.at(n.i0, j) += g.data[j];
        break;
      }
      case Op::AddScalar: {
        Tensor2& ga = grads_[n.a];
        for (std::size_t k = 0; k < g.numel(); ++k) ga.data[k] += g.data[k];
        break;
      }
      case Op::Scale: {
        Tensor2& ga = grads_[n.a];
        for (std::size_t k = 0; k < g.numel(); ++k) ga.data[k] += g.data[k] * n.c;
        break;
      }
      case Op::SumAll: {
        Tensor2& ga = grads_[n.a];
        const double s = g.data[0];
        for (std::size_t k = 0; k < ga.numel(); ++k) ga.data[k] += s;
        break;
      }
      case Op::LogSoftmaxRow: {
        // dx = g - softmax(x) * sum(g) per row; softmax(x) = exp(y)
        const Tensor2& y = vals_[i];
        Tensor2& ga = grads_[n.a];
        for (std::size_t r = 0; r < g.rows; ++r) {
          double gs = 0.0;
          for (std::size_t j = 0; j < g.cols; ++j) gs += g.at(r, j);
          for (std::size_t j = 0; j < g.cols; ++j) {
            ga.at(r, j) += g.at(r, j) - std::exp(y.at(r, j)) * gs;
          }
        }
        break;
      }
    }
  }
}

void Tape::clear() {
  nodes_.clear();
  vals_.clear();
  grads_.clear();
}

void Tape::rewind(std::size_t m) {
  if (m > nodes_.size()) throw std::logic_error("Tape::rewind: mark beyond tape end");
  nodes_.resize(m);
  vals_.resize(m);
  grads_.clear();
}

}  // namespace cctx
