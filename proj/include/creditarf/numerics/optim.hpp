#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "creditarf/numerics/autograd.hpp"

namespace creditarf::nx {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class T>
struct AdamState {
  std::vector<Tensor<T>> first_moment;
  std::vector<Tensor<T>> second_moment;
  std::uint64_t step = 0;
  AdamOptions options;
};

template <class T>
AdamState<T> make_adam_state(const ParameterSet<T>& params, AdamOptions options = {}) {
  AdamState<T> s;
  s.options = options;
  for (const auto& p : params) {
    s.first_moment.emplace_back(p.var.value().shape());
    s.second_moment.emplace_back(p.var.value().shape());
  }
  return s;
}

// Bias-corrected Adam with decoupled weight decay:
//   m <- b1 m + (1-b1) g,   v <- b2 v + (1-b2) g^2
//   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + wd * p)
// All gradients are checked before any parameter moves.
template <class T>
void adam_step(ParameterSet<T>& params, AdamState<T>& state, double lr, double weight_decay) {
  if (state.first_moment.size() != params.size()) {
    throw std::invalid_argument("Adam state does not match the parameter set");
  }
  for (const auto& p : params) {
    if (!p.var.grad().all_finite()) throw NumericError("non-finite gradient in parameter " + p.name);
  }
  ++state.step;
  const double b1 = state.options.beta1, b2 = state.options.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Var<T> v = params[k].var;
    auto& value = v.mutable_value();
    const auto& grad = v.grad();
    auto& m = state.first_moment[k];
    auto& s = state.second_moment[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = static_cast<double>(grad[i]);
      m[i] = static_cast<T>(b1 * static_cast<double>(m[i]) + (1.0 - b1) * g);
      s[i] = static_cast<T>(b2 * static_cast<double>(s[i]) + (1.0 - b2) * g * g);
      const double mhat = static_cast<double>(m[i]) / c1;
      const double vhat = static_cast<double>(s[i]) / c2;
      const double p = static_cast<double>(value[i]);
      value[i] = static_cast<T>(p - lr * (mhat / (std::sqrt(vhat) + state.options.eps) + weight_decay * p));
    }
  }
}

struct PlateauOptions {
  double factor = 0.5;
  std::size_t patience = 3;
  double min_lr = 1e-6;
  double threshold = 1e-8;  // improvement means loss < best - threshold
};

// Learning-rate reduction on a validation-loss plateau. After `patience`
// consecutive epochs without improvement the rate is multiplied by `factor`
// (floored at `min_lr`) and the counter restarts.
class PlateauScheduler {
 public:
  explicit PlateauScheduler(double lr, PlateauOptions options = {}) : lr_(lr), options_(options) {}

  double step(double val_loss) {
    if (val_loss < best_ - options_.threshold) {
      best_ = val_loss;
      bad_epochs_ = 0;
    } else if (++bad_epochs_ >= options_.patience) {
      lr_ = std::max(lr_ * options_.factor, options_.min_lr);
      bad_epochs_ = 0;
    }
    return lr_;
  }

  double lr() const { return lr_; }
  double best() const { return best_; }
  std::size_t bad_epochs() const { return bad_epochs_; }
  const PlateauOptions& options() const { return options_; }

 private:
  double lr_;
  PlateauOptions options_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t bad_epochs_ = 0;
};

}  // namespace creditarf::nx
