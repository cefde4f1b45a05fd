#pragma once

#include "a2gnn/tensor.hpp"

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace a2gnn {

class ReproducibilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    // Worst component error per checked tensor, in input order.
    std::vector<std::pair<std::string, double>> per_tensor;
};

// Compares reverse-mode gradients with central differences of step h.
// Error per component is |analytic - numeric| / max(1, |numeric|).
// A non-scalar output is reduced with sum() first. f must be deterministic:
// two evaluations at the same point have to agree bit for bit.
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h = 1e-6);

// Multi-tensor form: f reads the current values of `params`, which are
// perturbed in place and restored afterwards.
GradCheckReport grad_check(const std::function<Tensor()>& f,
                           const std::vector<std::pair<std::string, Tensor>>& params,
                           double h = 1e-6);

}  // namespace a2gnn
