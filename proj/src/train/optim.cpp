#include "semenet/train/optim.hpp"

#include <cmath>

#include "semenet/error.hpp"

namespace semenet {

template <typename T>
Optimizer<T>::Optimizer(OptimizerConfig cfg, std::vector<Parameter<T>*> params)
    : cfg_(cfg), params_(std::move(params)) {
  if (!(cfg_.lr >= 0)) throw ConfigurationError("learning rate must be >= 0");
  if (!(cfg_.momentum >= 0 && cfg_.momentum < 1)) throw ConfigurationError("momentum must lie in [0, 1)");
  if (!(cfg_.beta1 >= 0 && cfg_.beta1 < 1 && cfg_.beta2 >= 0 && cfg_.beta2 < 1)) {
    throw ConfigurationError("Adam betas must lie in [0, 1)");
  }
  if (!(cfg_.eps > 0)) throw ConfigurationError("Adam eps must be > 0");
  for (auto* p : params_) {
    state_.first.emplace_back(p->value.shape());
    if (cfg_.kind == OptimizerKind::adam) state_.second.emplace_back(p->value.shape());
  }
}

template <typename T>
void Optimizer<T>::step(double lr) {
  for (auto* p : params_) {
    if (p->grad.shape() != p->value.shape()) throw TrainingError("gradient of '" + p->name + "' has the wrong shape");
    for (T g : p->grad.data()) {
      if (!std::isfinite(g)) throw TrainingError("non-finite gradient in parameter '" + p->name + "'");
    }
  }
  ++state_.step;
  const double wd = cfg_.weight_decay;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto value = params_[i]->value.data();
    const auto grad = params_[i]->grad.data();
    auto m = state_.first[i].data();
    if (cfg_.kind == OptimizerKind::sgd) {
      for (std::size_t j = 0; j < value.size(); ++j) {
        const double g = grad[j] + wd * value[j];
        m[j] = static_cast<T>(cfg_.momentum * m[j] + g);
        value[j] = static_cast<T>(value[j] - lr * m[j]);
      }
    } else {
      auto v = state_.second[i].data();
      const double c1 = 1 - std::pow(cfg_.beta1, static_cast<double>(state_.step));
      const double c2 = 1 - std::pow(cfg_.beta2, static_cast<double>(state_.step));
      for (std::size_t j = 0; j < value.size(); ++j) {
        const double g = grad[j] + wd * value[j];
        m[j] = static_cast<T>(cfg_.beta1 * m[j] + (1 - cfg_.beta1) * g);
        v[j] = static_cast<T>(cfg_.beta2 * v[j] + (1 - cfg_.beta2) * g * g);
        const double mhat = m[j] / c1, vhat = v[j] / c2;
        value[j] = static_cast<T>(value[j] - lr * mhat / (std::sqrt(vhat) + cfg_.eps));
      }
    }
  }
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace semenet
