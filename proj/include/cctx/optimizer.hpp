#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cctx/tensor.hpp"

namespace cctx {

enum class OptimizerKind : std::uint8_t { Sgd = 0, Adam = 1 };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // classic L2, added to the gradient
};

// Optimizer state aligned with a fixed parameter order.
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::Adam;
  std::uint64_t t = 0;
  std::vector<Tensor2> m, v;  // empty for SGD

  static OptimizerState init(OptimizerKind kind, std::span<Tensor2* const> params);
};

// Global L2 norm over all gradient tensors.
double grad_norm(std::span<const Tensor2> grads);

// Scales gradients in place so the global norm is at most max_norm.
// Returns the pre-clip norm.
double clip_grad_norm(std::span<Tensor2> grads, double max_norm);

// One update step. grads must align with params and with the state.
void optimizer_update(std::span<Tensor2* const> params, std::span<const Tensor2> grads,
                      OptimizerState& state, const OptimizerConfig& cfg);

}  // namespace cctx
