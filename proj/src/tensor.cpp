#include "cctx/tensor.hpp"

#include <cmath>

namespace cctx {

bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

bool Tensor2::all_finite() const { return cctx::all_finite(data); }

}  // namespace cctx
