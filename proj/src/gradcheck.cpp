#include "cctx/gradcheck.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cctx {

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  os << "gradcheck: " << checked << " coords, max rel err " << max_rel_err;
  if (!loss_finite) os << " (LOSS NOT FINITE)";
  os << ", worst param " << worst_param << " coord " << worst_coord << " tape " << worst_tape
     << " fd " << worst_fd;
  return os.str();
}

namespace {

double eval_loss(const std::function<Val(Tape&, std::span<const Val>)>& build,
                 std::span<Tensor2* const> params, Precision prec) {
  Tape tape(prec);
  std::vector<Val> leased;
  leased.reserve(params.size());
  for (Tensor2* p : params) leased.push_back(tape.param(*p));
  return tape.scalar(build(tape, leased));
}

}  // namespace

GradCheckReport check_gradients(const std::function<Val(Tape&, std::span<const Val>)>& build,
                                std::span<Tensor2* const> params, Rng& rng,
                                std::size_t max_coords_per_param, double fd_step,
                                double denom_floor, Precision prec) {
  GradCheckReport report;

  Tape tape(prec);
  std::vector<Val> leased;
  leased.reserve(params.size());
  for (Tensor2* p : params) leased.push_back(tape.param(*p));
  Val loss = build(tape, leased);
  const double loss0 = tape.scalar(loss);
  if (!std::isfinite(loss0)) {
    report.loss_finite = false;
    throw std::runtime_error("check_gradients: loss is not finite (" + std::to_string(loss0) +
                             ")");
  }
  tape.backward(loss);

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor2& p = *params[pi];
    if (p.numel() == 0) continue;
    const Tensor2& g = tape.grad(leased[pi]);

    std::vector<std::size_t> coords;
    if (p.numel() <= max_coords_per_param) {
      coords.resize(p.numel());
      for (std::size_t k = 0; k < p.numel(); ++k) coords[k] = k;
    } else {
      coords.reserve(max_coords_per_param);
      for (std::size_t k = 0; k < max_coords_per_param; ++k) {
        coords.push_back(rng.below(p.numel()));
      }
    }

    for (std::size_t k : coords) {
      const double saved = p.data[k];
      p.data[k] = saved + fd_step;
      const double up = eval_loss(build, params, prec);
      p.data[k] = saved - fd_step;
      const double dn = eval_loss(build, params, prec);
      p.data[k] = saved;

      const double fd = (up - dn) / (2.0 * fd_step);
      const double an = g.data[k];
      const double denom = std::max({std::fabs(fd), std::fabs(an), denom_floor});
      const double rel = std::fabs(fd - an) / denom;
      ++report.checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = pi;
        report.worst_coord = k;
        report.worst_tape = an;
        report.worst_fd = fd;
      }
    }
  }
  return report;
}

}  // namespace cctx
