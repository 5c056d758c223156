#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "creditarf/numerics/autograd.hpp"
#include "creditarf/numerics/ops.hpp"
#include "creditarf/numerics/rng.hpp"

namespace creditarf::nx {

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
  std::string worst;  // "<input>[<index>]"
};

// Compares reverse-mode gradients against central differences at 64-bit.
// `fn` maps the inputs to any tensor; it is reduced to a scalar by a fixed
// random projection so the whole Jacobian participates. Relative error is
// |analytic - numeric| / max(|analytic|, |numeric|, floor).
inline GradCheckResult grad_check(const std::function<Var<double>(const std::vector<Var<double>>&)>& fn,
                                  std::vector<Var<double>> inputs, std::uint64_t seed, double h = 1e-4,
                                  double floor = 1e-6) {
  Tensor<double> projection;
  auto scalar = [&](const std::vector<Var<double>>& in) {
    Var<double> out = fn(in);
    if (projection.size() != out.value().size()) {
      Rng rng(seed ^ 0xC0FFEEULL);
      projection = Tensor<double>(out.shape());
      for (auto& v : projection.values()) v = rng.uniform(-1.0, 1.0);
    }
    return sum(mul(out, constant(projection)));
  };

  backward(scalar(inputs));
  std::vector<Tensor<double>> analytic;
  for (const auto& in : inputs) analytic.push_back(in.grad());

  GradCheckResult r;
  NoGradGuard no_grad;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto& value = inputs[k].mutable_value();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double orig = value[i];
      value[i] = orig + h;
      const double up = scalar(inputs).value()[0];
      value[i] = orig - h;
      const double down = scalar(inputs).value()[0];
      value[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[k][i];
      const double abs_err = std::abs(a - numeric);
      const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), floor});
      r.max_abs_error = std::max(r.max_abs_error, abs_err);
      if (rel > r.max_rel_error) {
        r.max_rel_error = rel;
        r.worst = std::to_string(k) + "[" + std::to_string(i) + "]";
      }
      ++r.checked;
    }
  }
  return r;
}

}  // namespace creditarf::nx
