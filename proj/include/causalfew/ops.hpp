#pragma once

#include "causalfew/tensor.hpp"

namespace causalfew {
namespace ops {

// Elementwise. `b` may be same-shape or scalar [1].
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr div(const TensorPtr& a, const TensorPtr& b);

// Elementwise product. `b` may be same-shape, scalar [1], or a length-C
// per-channel vector against a [C,H,W] / [B,C,H,W] tensor. Channel broadcast
// is the only non-scalar broadcast the engine supports.
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);

TensorPtr neg(const TensorPtr& a);
TensorPtr scale(const TensorPtr& a, double c);      // constant factor
TensorPtr add_const(const TensorPtr& a, double c);  // constant offset
TensorPtr pow_scalar(const TensorPtr& a, double p);
TensorPtr relu(const TensorPtr& a);

// x:[B,Cin,H,W], w:[Cout,Cin,kh,kw], bias:[Cout] (may be null)
TensorPtr conv2d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& bias,
                 int stride, int padding);

// no padding; gradient routes to the first max in row-major window order
TensorPtr maxpool2d(const TensorPtr& x, int kernel = 2, int stride = 2);

// x:[B,F], w:[F,O], bias:[O] (may be null)
TensorPtr linear(const TensorPtr& x, const TensorPtr& w, const TensorPtr& bias);

// channel axis: dim 0 for rank-3, dim 1 for rank-4
TensorPtr concat_channels(const TensorPtr& a, const TensorPtr& b);
TensorPtr slice_channels(const TensorPtr& x, std::int64_t from, std::int64_t to);

// [B,...] -> [...] for one batch index
TensorPtr slice_batch(const TensorPtr& x, std::int64_t index);

// full reductions to [1]
TensorPtr sum(const TensorPtr& x);
TensorPtr mean(const TensorPtr& x);
TensorPtr max_reduce(const TensorPtr& x);  // first-index tie-break

// n scalars -> [n]
TensorPtr stack_scalars(const std::vector<TensorPtr>& items);

}  // namespace ops
}  // namespace causalfew
