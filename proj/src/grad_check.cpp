#include "causalfew/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace causalfew {

GradCheckResult grad_check(
    const std::function<TensorPtr(const std::vector<TensorPtr>&)>& f,
    const std::vector<TensorPtr>& inputs, double eps) {
    for (const auto& t : inputs) {
        if (!t->requires_grad) {
            throw std::invalid_argument("grad_check: all inputs must require grad");
        }
        t->ensure_grad();
        t->zero_grad();
    }
    TensorPtr y;
    try {
        y = f(inputs);
    } catch (const NonFiniteError& e) {
        return {false, std::numeric_limits<double>::quiet_NaN(),
                std::string("forward produced non-finite values: ") + e.what()};
    }
    if (y->numel() != 1) {
        throw std::invalid_argument("grad_check: function output must be scalar, got " +
                                    y->shape_str());
    }
    y->backward();

    std::vector<std::vector<double>> analytic;
    analytic.reserve(inputs.size());
    for (const auto& t : inputs) analytic.push_back(t->grad);

    double max_err = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        Tensor& t = *inputs[k];
        for (std::size_t i = 0; i < t.data.size(); ++i) {
            const double saved = t.data[i];
            double f_plus, f_minus;
            try {
                t.data[i] = saved + eps;
                f_plus = f(inputs)->data[0];
                t.data[i] = saved - eps;
                f_minus = f(inputs)->data[0];
            } catch (const NonFiniteError& e) {
                t.data[i] = saved;
                return {false, std::numeric_limits<double>::quiet_NaN(),
                        std::string("perturbed forward produced non-finite values: ") + e.what()};
            }
            t.data[i] = saved;
            const double fd = (f_plus - f_minus) / (2.0 * eps);
            const double a = analytic[k][i];
            max_err = std::max(max_err, std::abs(a - fd) / std::max(1.0, std::abs(a)));
        }
    }
    return {true, max_err, ""};
}

}  // namespace causalfew
