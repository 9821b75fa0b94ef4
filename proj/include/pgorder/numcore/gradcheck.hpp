#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "pgorder/numcore/layers.hpp"
#include "pgorder/numcore/tensor.hpp"

namespace pgo::nc {

struct GradCheckEntry {
  std::string param;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::vector<GradCheckEntry> failures;

  [[nodiscard]] bool passed() const { return failures.empty() && checked > 0; }
};

/// Compares autodiff gradients of the scalar `f` against central differences.
///
/// Relative error is |a − n| / max(|a|, |n|). An entry fails when that exceeds
/// `tolerance` and the absolute gap also exceeds `abs_floor`, which keeps
/// entries whose true gradient is zero from failing on round-off.
/// `max_per_param` > 0 checks an evenly strided subset of each parameter.
inline GradCheckReport grad_check(const std::function<Tensor<double>()>& f, const ParamList<double>& params,
                                  double epsilon = 1e-6, double tolerance = 1e-3, double abs_floor = 1e-7,
                                  std::size_t max_per_param = 0) {
  GradCheckReport report;
  for (auto [name, p] : params) p.zero_grad();
  f().backward();

  for (auto [name, p] : params) {
    auto values = p.mutable_value().data();
    const std::vector<double> analytic(p.grad().begin(), p.grad().end());
    const std::size_t stride =
        max_per_param == 0 || values.size() <= max_per_param ? 1 : values.size() / max_per_param;
    for (std::size_t i = 0; i < values.size(); i += stride) {
      const double saved = values[i];
      double plus = 0.0, minus = 0.0;
      {
        NoGradGuard guard;
        values[i] = saved + epsilon;
        plus = f().item();
        values[i] = saved - epsilon;
        minus = f().item();
      }
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double a = analytic[i];
      const double gap = std::abs(a - numeric);
      const double denom = std::max(std::abs(a), std::abs(numeric));
      const double rel = denom > 0.0 ? gap / denom : 0.0;
      ++report.checked;
      // near-zero gradients only contribute round-off to the summary figure
      if (gap > abs_floor || denom > 1e-4) report.max_rel_error = std::max(report.max_rel_error, rel);
      if (rel > tolerance && gap > abs_floor) report.failures.push_back({name, i, a, numeric, rel});
    }
  }
  return report;
}

}  // namespace pgo::nc
