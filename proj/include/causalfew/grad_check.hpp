#pragma once

#include <functional>

#include "causalfew/tensor.hpp"

namespace causalfew {

struct GradCheckResult {
    bool ok = false;            // false when evaluation hit a non-finite state
    double max_rel_err = 0.0;   // max over coordinates of |analytic-fd|/max(1,|analytic|)
    std::string message;
};

// Central finite differences against the tape gradient. `f` must map the
// given leaves to a scalar; non-scalar output is rejected. A NaN/Inf during
// any evaluation is reported as an error state, not a number.
GradCheckResult grad_check(
    const std::function<TensorPtr(const std::vector<TensorPtr>&)>& f,
    const std::vector<TensorPtr>& inputs, double eps = 1e-5);

}  // namespace causalfew
