#pragma once

#include <optional>
#include <vector>

#include "causalfew/tensor.hpp"

namespace causalfew {

// Min-max AUC surrogate: descent variables a, b track the class score
// centers; the dual variable alpha (ascent, projected to >= 0) enforces the
// ranking margin.
struct AucmState {
    double a = 0.0;
    double b = 0.0;
    double alpha = 0.0;
    double margin = 1.0;
};

struct PesgConfig {
    double lr = 1e-2;
    double weight_decay = 1e-2;
    int epochs = 100;
    std::vector<int> decay_epochs = {20, 80};
    double decay_factor = 10.0;
};

// piecewise-constant schedule: lr / factor^(#decay epochs passed)
double pesg_lr(const PesgConfig& cfg, int epoch);

// One class's (a, b, alpha) leaves inside a loss graph, so their gradients
// come out of the same backward pass as the model's.
struct AucmLeaves {
    TensorPtr a, b, alpha;
    int class_id = 0;  // caller-side identifier for the state that backs them
};

struct LossGraph {
    TensorPtr loss;
    std::vector<AucmLeaves> leaves;
    int skipped_classes = 0;
};

// Batch positive rate is estimated from the labels. Returns nullopt (a skip
// signal) when the batch holds a single class.
std::optional<LossGraph> aucm_loss(const std::vector<TensorPtr>& scores,
                                   const std::vector<int>& binary_labels, const AucmState& state,
                                   int class_id = 0);

// One-vs-rest mean of per-class AUCM losses; classes missing a positive or a
// negative in the batch are skipped and counted.
std::optional<LossGraph> multiclass_aucm(const std::vector<std::vector<TensorPtr>>& score_rows,
                                         const std::vector<int>& labels,
                                         const std::vector<AucmState*>& states,
                                         const std::vector<int>& class_ids);

// Gradient step after backward(): descent with weight decay on the model
// parameters and on (a, b); ascent with projection to >= 0 on alpha.
// Rejects the step (throws NonFiniteError) if any gradient is non-finite.
void pesg_step(const std::vector<TensorPtr>& params, const std::vector<AucmLeaves>& leaves,
               const std::vector<AucmState*>& states, const PesgConfig& cfg, int epoch);

}  // namespace causalfew
