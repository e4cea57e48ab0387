#include "causalfew/training.hpp"

#include <algorithm>
#include <cmath>

#include "causalfew/ops.hpp"

namespace causalfew {

double pesg_lr(const PesgConfig& cfg, int epoch) {
    double lr = cfg.lr;
    for (const int boundary : cfg.decay_epochs) {
        if (epoch >= boundary) lr /= cfg.decay_factor;
    }
    return lr;
}

std::optional<LossGraph> aucm_loss(const std::vector<TensorPtr>& scores,
                                   const std::vector<int>& binary_labels, const AucmState& state,
                                   int class_id) {
    if (scores.size() != binary_labels.size() || scores.empty()) {
        throw std::invalid_argument("aucm_loss: scores/labels mismatch");
    }
    const auto n = static_cast<double>(scores.size());
    double n_pos = 0.0;
    for (const int y : binary_labels) n_pos += y ? 1.0 : 0.0;
    if (n_pos == 0.0 || n_pos == n) return std::nullopt;  // single-class batch: skip
    const double p_hat = n_pos / n;

    std::vector<double> pos_mask(scores.size()), neg_mask(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        pos_mask[i] = binary_labels[i] ? 1.0 : 0.0;
        neg_mask[i] = binary_labels[i] ? 0.0 : 1.0;
    }
    const auto count = static_cast<std::int64_t>(scores.size());
    const TensorPtr mp = Tensor::from_data({count}, pos_mask);
    const TensorPtr mn = Tensor::from_data({count}, neg_mask);

    AucmLeaves leaves;
    leaves.a = Tensor::scalar(state.a, true);
    leaves.b = Tensor::scalar(state.b, true);
    leaves.alpha = Tensor::scalar(state.alpha, true);
    leaves.class_id = class_id;

    const TensorPtr s = ops::stack_scalars(scores);
    // (1-p) * mean[(s-a)^2 ; y=1] + p * mean[(s-b)^2 ; y=0]
    const TensorPtr sq_pos = ops::mul(ops::pow_scalar(ops::sub(s, leaves.a), 2.0), mp);
    const TensorPtr sq_neg = ops::mul(ops::pow_scalar(ops::sub(s, leaves.b), 2.0), mn);
    const TensorPtr t1 = ops::scale(ops::sum(sq_pos), (1.0 - p_hat) / n);
    const TensorPtr t2 = ops::scale(ops::sum(sq_neg), p_hat / n);
    // 2 alpha * ( m p (1-p) + mean[p s ; y=0] - mean[(1-p) s ; y=1] )
    const TensorPtr ranking = ops::add_const(
        ops::scale(ops::sum(ops::sub(ops::scale(ops::mul(s, mn), p_hat),
                                     ops::scale(ops::mul(s, mp), 1.0 - p_hat))),
                   1.0 / n),
        state.margin * p_hat * (1.0 - p_hat));
    const TensorPtr t3 = ops::scale(ops::mul(leaves.alpha, ranking), 2.0);
    // - p (1-p) alpha^2
    const TensorPtr t4 = ops::scale(ops::pow_scalar(leaves.alpha, 2.0), -(p_hat * (1.0 - p_hat)));

    LossGraph graph;
    graph.loss = ops::add(ops::add(t1, t2), ops::add(t3, t4));
    graph.leaves.push_back(leaves);
    return graph;
}

std::optional<LossGraph> multiclass_aucm(const std::vector<std::vector<TensorPtr>>& score_rows,
                                         const std::vector<int>& labels,
                                         const std::vector<AucmState*>& states,
                                         const std::vector<int>& class_ids) {
    if (score_rows.size() != labels.size() || score_rows.empty()) {
        throw std::invalid_argument("multiclass_aucm: scores/labels mismatch");
    }
    const std::size_t n_classes = score_rows.front().size();
    if (n_classes < 2 || states.size() != n_classes || class_ids.size() != n_classes) {
        throw std::invalid_argument("multiclass_aucm: need one state per class column");
    }
    LossGraph graph;
    std::vector<TensorPtr> class_losses;
    for (std::size_t c = 0; c < n_classes; ++c) {
        std::vector<TensorPtr> col(score_rows.size());
        std::vector<int> ind(score_rows.size());
        for (std::size_t q = 0; q < score_rows.size(); ++q) {
            col[q] = score_rows[q][c];
            ind[q] = labels[q] == static_cast<int>(c) ? 1 : 0;
        }
        auto sub_graph = aucm_loss(col, ind, *states[c], class_ids[c]);
        if (!sub_graph) {
            ++graph.skipped_classes;
            continue;
        }
        class_losses.push_back(sub_graph->loss);
        graph.leaves.push_back(sub_graph->leaves.front());
    }
    if (class_losses.empty()) return std::nullopt;
    TensorPtr total = class_losses.front();
    for (std::size_t i = 1; i < class_losses.size(); ++i) {
        total = ops::add(total, class_losses[i]);
    }
    graph.loss = ops::scale(total, 1.0 / static_cast<double>(class_losses.size()));
    return graph;
}

void pesg_step(const std::vector<TensorPtr>& params, const std::vector<AucmLeaves>& leaves,
               const std::vector<AucmState*>& states, const PesgConfig& cfg, int epoch) {
    if (leaves.size() != states.size()) {
        throw std::invalid_argument("pesg_step: leaves/states mismatch");
    }
    // validate every gradient before mutating anything
    for (const auto& p : params) {
        if (p->grad.size() != p->data.size()) continue;
        check_finite(p->grad, "pesg_step");
    }
    for (const auto& l : leaves) {
        check_finite(l.a->grad, "pesg_step");
        check_finite(l.b->grad, "pesg_step");
        check_finite(l.alpha->grad, "pesg_step");
    }
    const double lr = pesg_lr(cfg, epoch);
    for (const auto& p : params) {
        if (p->grad.size() != p->data.size()) continue;  // untouched by this graph
        for (std::size_t i = 0; i < p->data.size(); ++i) {
            p->data[i] -= lr * (p->grad[i] + cfg.weight_decay * p->data[i]);
        }
        p->zero_grad();
    }
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        AucmState& st = *states[i];
        st.a -= lr * (leaves[i].a->grad[0] + cfg.weight_decay * st.a);
        st.b -= lr * (leaves[i].b->grad[0] + cfg.weight_decay * st.b);
        st.alpha = std::max(0.0, st.alpha + lr * leaves[i].alpha->grad[0]);
    }
}

}  // namespace causalfew
