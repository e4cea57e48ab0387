#include "causalfew/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace causalfew {

namespace {
thread_local bool t_grad_enabled = true;
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

std::int64_t shape_numel(const std::vector<std::int64_t>& shape) {
    std::int64_t n = 1;
    for (const std::int64_t e : shape) {
        if (e <= 0) throw std::invalid_argument("tensor extents must be positive");
        n *= e;
    }
    return n;
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

std::string shape_to_string(const std::vector<std::int64_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << "]";
    return os.str();
}

void check_finite(const std::vector<double>& values, const char* op_name) {
    for (const double v : values) {
        if (!std::isfinite(v)) {
            throw NonFiniteError(std::string(op_name) + ": non-finite value produced");
        }
    }
}

TensorPtr Tensor::zeros(std::vector<std::int64_t> shape, bool requires_grad) {
    auto t = std::make_shared<Tensor>();
    const std::int64_t n = shape_numel(shape);
    t->shape = std::move(shape);
    t->data.assign(static_cast<std::size_t>(n), 0.0);
    t->requires_grad = requires_grad;
    return t;
}

TensorPtr Tensor::from_data(std::vector<std::int64_t> shape, std::vector<double> values,
                            bool requires_grad) {
    const std::int64_t n = shape_numel(shape);
    if (static_cast<std::int64_t>(values.size()) != n) {
        throw std::invalid_argument("from_data: element count " + std::to_string(values.size()) +
                                    " does not match shape " + shape_to_string(shape));
    }
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->data = std::move(values);
    t->requires_grad = requires_grad;
    return t;
}

TensorPtr Tensor::scalar(double value, bool requires_grad) {
    return from_data({1}, {value}, requires_grad);
}

void Tensor::ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

std::string Tensor::shape_str() const { return shape_to_string(shape); }

void Tensor::backward() {
    if (numel() != 1) {
        throw std::invalid_argument("backward: root must be scalar, got " + shape_str());
    }
    // Iterative DFS post-order gives a topological order of the tape.
    std::vector<Tensor*> order;
    std::unordered_set<Tensor*> visited;
    std::vector<std::pair<Tensor*, std::size_t>> stack;
    stack.emplace_back(this, 0);
    visited.insert(this);
    while (!stack.empty()) {
        auto& [node, next_child] = stack.back();
        if (next_child < node->parents.size()) {
            Tensor* p = node->parents[next_child].get();
            ++next_child;
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    for (Tensor* node : order) node->ensure_grad();
    grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Tensor* node = *it;
        if (node->backward_fn) {
            node->backward_fn(*node);
            for (const TensorPtr& p : node->parents) {
                if (p->requires_grad) check_finite(p->grad, "backward");
            }
        }
    }
}

void Tensor::dump(const std::string& path) const {
    std::ofstream raw(path, std::ios::binary);
    if (!raw) throw std::runtime_error("dump: cannot open " + path);
    for (const double v : data) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        unsigned char le[8];
        for (int i = 0; i < 8; ++i) le[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
        raw.write(reinterpret_cast<const char*>(le), 8);
    }
    std::ofstream side(path + ".json");
    side << "{\"shape\":" << shape_str() << ",\"dtype\":\"float64-le\"}\n";
}

}  // namespace causalfew
