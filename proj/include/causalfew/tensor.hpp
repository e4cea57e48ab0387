#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace causalfew {

// Raised when a forward op produces NaN/Inf, or a gradient turns non-finite.
// Every op checks its output, so a poisoned value never propagates silently.
class NonFiniteError : public std::runtime_error {
public:
    explicit NonFiniteError(const std::string& what) : std::runtime_error(what) {}
};

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Dense row-major float64 tensor node. Nodes own their parents through
// shared_ptr, so a graph lives exactly as long as its downstream results.
// The backward closure receives the node itself; it must capture only
// parents and forward-pass auxiliaries, never the owning node.
class Tensor : public std::enable_shared_from_this<Tensor> {
public:
    std::vector<std::int64_t> shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::vector<double> grad;  // same size as data once backward touches the node

    std::vector<TensorPtr> parents;
    std::function<void(Tensor&)> backward_fn;  // nullptr for leaves

    static TensorPtr zeros(std::vector<std::int64_t> shape, bool requires_grad = false);
    static TensorPtr from_data(std::vector<std::int64_t> shape, std::vector<double> values,
                               bool requires_grad = false);
    static TensorPtr scalar(double value, bool requires_grad = false);

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
    std::int64_t dim(std::size_t i) const { return shape.at(i); }
    std::size_t rank() const { return shape.size(); }

    void ensure_grad();
    void zero_grad();

    // Reverse-mode pass from this node (must be scalar). Seeds d(this)=1,
    // replays the tape in reverse topological order, accumulating into every
    // reachable node's grad buffer. Throws NonFiniteError if any gradient
    // turns non-finite.
    void backward();

    std::string shape_str() const;

    // debug dump: raw little-endian float64 + "<path>.json" shape sidecar
    void dump(const std::string& path) const;
};

std::int64_t shape_numel(const std::vector<std::int64_t>& shape);
bool same_shape(const Tensor& a, const Tensor& b);
std::string shape_to_string(const std::vector<std::int64_t>& shape);

// Scoped gradient switch (thread-local). While disabled, ops skip tape
// bookkeeping entirely; evaluation graphs then free activations eagerly.
bool grad_enabled();
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

// Throws NonFiniteError when any value is NaN/Inf.
void check_finite(const std::vector<double>& values, const char* op_name);

}  // namespace causalfew
