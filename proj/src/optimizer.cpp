#include "cctx/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace cctx {

OptimizerState OptimizerState::init(OptimizerKind kind, std::span<Tensor2* const> params) {
  OptimizerState s;
  s.kind = kind;
  if (kind == OptimizerKind::Adam) {
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (Tensor2* p : params) {
      s.m.emplace_back(p->rows, p->cols);
      s.v.emplace_back(p->rows, p->cols);
    }
  }
  return s;
}

double grad_norm(std::span<const Tensor2> grads) {
  double sq = 0.0;
  for (const Tensor2& g : grads) {
    for (double x : g.data) sq += x * x;
  }
  return std::sqrt(sq);
}

double clip_grad_norm(std::span<Tensor2> grads, double max_norm) {
  const double norm = grad_norm(grads);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (Tensor2& g : grads) {
      for (double& x : g.data) x *= s;
    }
  }
  return norm;
}

void optimizer_update(std::span<Tensor2* const> params, std::span<const Tensor2> grads,
                      OptimizerState& state, const OptimizerConfig& cfg) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("optimizer_update: params/grads size mismatch");
  }
  ++state.t;
  if (cfg.kind == OptimizerKind::Sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      Tensor2& p = *params[i];
      const Tensor2& g = grads[i];
      for (std::size_t k = 0; k < p.numel(); ++k) {
        const double gk = g.data[k] + cfg.weight_decay * p.data[k];
        p.data[k] -= cfg.learning_rate * gk;
      }
    }
    return;
  }
  if (state.m.size() != params.size()) {
    throw std::invalid_argument("optimizer_update: adam state does not match params");
  }
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor2& p = *params[i];
    const Tensor2& g = grads[i];
    Tensor2& m = state.m[i];
    Tensor2& v = state.v[i];
    for (std::size_t k = 0; k < p.numel(); ++k) {
      const double gk = g.data[k] + cfg.weight_decay * p.data[k];
      m.data[k] = cfg.beta1 * m.data[k] + (1.0 - cfg.beta1) * gk;
      v.data[k] = cfg.beta2 * v.data[k] + (1.0 - cfg.beta2) * gk * gk;
      const double mhat = m.data[k] / bc1;
      const double vhat = v.data[k] / bc2;
      p.data[k] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace cctx
