#pragma once

#include <functional>
#include <map>
#include <string>

#include "otclab/params.hpp"
#include "otclab/tape.hpp"

namespace otclab {

// Builds a scalar loss on the given tape from already-bound parameter vars.
using LossGraphFn = std::function<Var(Tape&, const std::map<std::string, Var>&)>;

struct FiniteDiffReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  int worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  size_t entries_checked = 0;
};

// Central finite differences against the tape's analytic gradients:
// numeric = (f(x+eps) - f(x-eps)) / (2 eps), relative error per entry
// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
// eps must lie in [1e-7, 1e-3]. A non-finite loss while probing raises a
// NumericError naming the parameter being perturbed.
FiniteDiffReport finite_diff_check(const LossGraphFn& build, const Parameters& params,
                                   double eps);

}  // namespace otclab
