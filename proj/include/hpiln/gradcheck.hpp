#ifndef HPILN_GRADCHECK_HPP_
#define HPILN_GRADCHECK_HPP_

#include <cstddef>
#include <cstdint>
#include <string>

namespace hpiln {

// Differentiation targets verifiable against central finite differences.
enum class GradTarget {
  Triplet,        // trip
  HardTriplet,    // htrip
  HardGlobal,     // hgt
  HardCross,      // hct
  HardPentaplet,  // hp
  Identity,       // id
  Hpi,            // hpi
  Model,          // model: whole-model parameter gradient, hpi objective
};

GradTarget grad_target_from_string(const std::string& name);
std::string to_string(GradTarget target);

// Acceptance threshold: 1e-5 for loss-level targets, 1e-4 through the model.
double grad_target_tolerance(GradTarget target);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t instances = 0;
  std::size_t coordinates = 0;  // total coordinates compared
};

// Draws `instances` random tie-free instances (mining selections and hinges
// at least 1e-3 away from any switch, ReLU pre-activations off zero) and
// compares analytic gradients against (f(x+h) - f(x-h)) / 2h with h = 1e-5.
// Relative error per coordinate: |a - f| / max(|a|, |f|, 1e-4).
GradCheckResult run_gradcheck(GradTarget target, std::size_t instances, std::uint64_t seed);

}  // namespace hpiln

#endif  // HPILN_GRADCHECK_HPP_
