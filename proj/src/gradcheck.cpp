#include "otclab/gradcheck.hpp"

#include <cmath>

#include "otclab/errors.hpp"

namespace otclab {

namespace {

double eval_loss(const LossGraphFn& build, const Parameters& params) {
  Tape tape;
  std::map<std::string, Var> bound;
  for (const auto& [name, t] : params) bound[name] = tape.param(name, t);
  Var loss = build(tape, bound);
  return tape.value(loss).item();
}

}  // namespace

FiniteDiffReport finite_diff_check(const LossGraphFn& build, const Parameters& params,
                                   double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) {
    throw UsageError("finite_diff_check: eps must be in [1e-7, 1e-3]");
  }

  // Analytic pass.
  Tape tape;
  std::map<std::string, Var> bound;
  for (const auto& [name, t] : params) bound[name] = tape.param(name, t);
  Var loss = build(tape, bound);
  if (!tape.value(loss).all_finite()) {
    throw NumericError("finite_diff_check: non-finite loss at base point");
  }
  Gradients analytic = tape.backward(loss);

  FiniteDiffReport report;
  Parameters probe;
  for (const auto& [name, t] : params) probe.emplace(name, t);

  for (const auto& [name, t] : params) {
    Tensor& pt = probe.at(name);
    const Tensor& ga = analytic.at(name);
    for (size_t i = 0; i < pt.size(); ++i) {
      const double orig = pt[i];
      double fp = 0.0, fm = 0.0;
      try {
        pt[i] = orig + eps;
        fp = eval_loss(build, probe);
        pt[i] = orig - eps;
        fm = eval_loss(build, probe);
      } catch (const NumericError& e) {
        pt[i] = orig;
        throw NumericError("finite_diff_check: probing " + name + "[" +
                           std::to_string(i) + "]: " + e.what());
      }
      pt[i] = orig;
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        throw NumericError("finite_diff_check: non-finite loss probing " + name +
                           "[" + std::to_string(i) + "]");
      }
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = ga[i];
      const double rel =
          std::fabs(a - numeric) / std::max(1e-8, std::fabs(a) + std::fabs(numeric));
      ++report.entries_checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = name;
        report.worst_index = static_cast<int>(i);
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace otclab
