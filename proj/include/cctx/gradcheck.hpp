#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cctx/rng.hpp"
#include "cctx/tape.hpp"

namespace cctx {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
  bool loss_finite = true;
  // coordinate with the worst disagreement, for diagnostics
  std::size_t worst_param = 0;
  std::size_t worst_coord = 0;
  double worst_tape = 0.0;
  double worst_fd = 0.0;

  bool ok(double tolerance) const { return loss_finite && max_rel_err < tolerance; }
  std::string summary() const;
};

// Compares tape gradients against central finite differences on a sampled
// subset of parameter coordinates. `build` must rebuild the same forward pass
// on any tape it is given (deterministic inputs, fixed noise), leasing the
// supplied parameters in order and returning the scalar loss value.
//
// Relative error uses max(|a|, |b|, denom_floor) as denominator; the floor
// keeps finite-difference roundoff on near-zero gradients from dominating.
GradCheckReport check_gradients(
    const std::function<Val(Tape&, std::span<const Val>)>& build,
    std::span<Tensor2* const> params, Rng& rng,
    std::size_t max_coords_per_param = 25, double fd_step = 1e-5,
    double denom_floor = 1e-3, Precision prec = Precision::F64);

}  // namespace cctx
