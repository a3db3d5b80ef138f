#include "hpiln/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "hpiln/core.hpp"

namespace hpiln {

void AdamConfig::validate() const {
  if (learning_rate <= 0.0) throw input_error("learning rate must be > 0");
  if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0) {
    throw input_error("adam betas must be in (0, 1)");
  }
  if (epsilon <= 0.0) throw input_error("adam epsilon must be > 0");
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& config) {
  if (params.size() != grads.size()) throw input_error("param/grad size mismatch");
  if (state.m.size() != params.size()) {
    if (state.t != 0) throw input_error("adam state size mismatch");
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    if (!std::isfinite(g)) {
      throw numeric_error("non-finite gradient at component " + std::to_string(i));
    }
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

}  // namespace hpiln
