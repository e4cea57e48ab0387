#pragma once

#include "causalfew/tensor.hpp"

namespace causalfew {

// Brownian-distance-covariance style pooling: channels are the random
// variables, flattened spatial positions the observations.

// [C,H,W] or [C,D] -> [C,C]. Pairwise Euclidean distances between channel
// rows, then double centering: A - rowmean - colmean + grandmean. The result
// is symmetric with row/col sums ~ 0. Requires at least 2 spatial positions.
// Differentiable back to the input; zero-distance pairs contribute no
// gradient (the distance is not differentiable there).
TensorPtr bdc_matrix(const TensorPtr& features);

// Elementwise arithmetic mean of support matrices. A single matrix is
// returned unchanged.
TensorPtr prototype_mean(const std::vector<TensorPtr>& support);

// Frobenius inner product <query, prototype> -> [1]. Higher = more similar.
TensorPtr bdc_score(const TensorPtr& query, const TensorPtr& prototype);

}  // namespace causalfew
