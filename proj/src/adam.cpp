#include "synesthesia/adam.hpp"

#include <cmath>

#include "synesthesia/error.hpp"

namespace synesthesia {

Adam::Adam(std::size_t n, AdamHyper hyper) : hyper_(hyper), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grads,
                std::span<const double> learning_rates) {
  if (params.size() != m_.size() || grads.size() != m_.size() ||
      learning_rates.size() != m_.size()) {
    throw ParameterError("Adam::step: size mismatch");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(hyper_.beta1, t_);
  const double bc2 = 1.0 - std::pow(hyper_.beta2, t_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m_[i] = hyper_.beta1 * m_[i] + (1.0 - hyper_.beta1) * g;
    v_[i] = hyper_.beta2 * v_[i] + (1.0 - hyper_.beta2) * g * g;
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] -= learning_rates[i] * m_hat / (std::sqrt(v_hat) + hyper_.epsilon);
  }
}

void Adam::step(std::span<double> params, std::span<const double> grads, double learning_rate) {
  std::vector<double> lrs(params.size(), learning_rate);
  step(params, grads, lrs);
}

}  // namespace synesthesia
