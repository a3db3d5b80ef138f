#ifndef HPILN_OPTIM_HPP_
#define HPILN_OPTIM_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace hpiln {

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

// First/second moment buffers plus the step counter for one parameter tensor.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// One bias-corrected Adam update:
//   m <- b1*m + (1-b1)*g,  v <- b2*v + (1-b2)*g^2,
//   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps).
// Throws numeric_error on a non-finite gradient component.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& config);

}  // namespace hpiln

#endif  // HPILN_OPTIM_HPP_
