#include "causalfew/bdc.hpp"

#include <cmath>

#include "causalfew/ops.hpp"

namespace causalfew {

TensorPtr bdc_matrix(const TensorPtr& features) {
    if (features->rank() != 2 && features->rank() != 3) {
        throw std::invalid_argument("bdc_matrix: expected [C,D] or [C,H,W], got " +
                                    features->shape_str());
    }
    const std::int64_t C = features->dim(0);
    const std::int64_t D = features->numel() / C;
    if (D < 2) throw std::invalid_argument("bdc_matrix: need at least 2 spatial positions");

    const double* X = features->data.data();
    std::vector<double> dist(static_cast<std::size_t>(C * C), 0.0);
    for (std::int64_t u = 0; u < C; ++u) {
        for (std::int64_t v = u + 1; v < C; ++v) {
            double s = 0.0;
            const double* xu = X + u * D;
            const double* xv = X + v * D;
            for (std::int64_t t = 0; t < D; ++t) {
                const double diff = xu[t] - xv[t];
                s += diff * diff;
            }
            const double d = std::sqrt(s);
            dist[static_cast<std::size_t>(u * C + v)] = d;
            dist[static_cast<std::size_t>(v * C + u)] = d;
        }
    }

    std::vector<double> row_mean(static_cast<std::size_t>(C), 0.0);
    double grand = 0.0;
    for (std::int64_t u = 0; u < C; ++u) {
        double s = 0.0;
        for (std::int64_t v = 0; v < C; ++v) s += dist[static_cast<std::size_t>(u * C + v)];
        row_mean[static_cast<std::size_t>(u)] = s / static_cast<double>(C);
        grand += s;
    }
    grand /= static_cast<double>(C * C);

    std::vector<double> centered(static_cast<std::size_t>(C * C));
    for (std::int64_t u = 0; u < C; ++u) {
        for (std::int64_t v = 0; v < C; ++v) {
            // col means equal row means: dist is symmetric
            centered[static_cast<std::size_t>(u * C + v)] =
                dist[static_cast<std::size_t>(u * C + v)] - row_mean[static_cast<std::size_t>(u)] -
                row_mean[static_cast<std::size_t>(v)] + grand;
        }
    }

    auto dist_keep = std::make_shared<std::vector<double>>(std::move(dist));
    auto bw = [features, dist_keep, C, D](Tensor& self) {
        if (!features->requires_grad) return;
        const std::vector<double>& A = *dist_keep;
        const double* G = self.grad.data();
        // gradient of the centering: Gc = H G H with H = I - J/C
        std::vector<double> grow(static_cast<std::size_t>(C), 0.0),
            gcol(static_cast<std::size_t>(C), 0.0);
        double gall = 0.0;
        for (std::int64_t u = 0; u < C; ++u) {
            for (std::int64_t v = 0; v < C; ++v) {
                const double g = G[u * C + v];
                grow[static_cast<std::size_t>(u)] += g;
                gcol[static_cast<std::size_t>(v)] += g;
                gall += g;
            }
        }
        const double invc = 1.0 / static_cast<double>(C);
        std::vector<double> Gc(static_cast<std::size_t>(C * C));
        for (std::int64_t u = 0; u < C; ++u) {
            for (std::int64_t v = 0; v < C; ++v) {
                Gc[static_cast<std::size_t>(u * C + v)] =
                    G[u * C + v] - grow[static_cast<std::size_t>(u)] * invc -
                    gcol[static_cast<std::size_t>(v)] * invc + gall * invc * invc;
            }
        }
        // chain through the pairwise distances
        const double* X = features->data.data();
        double* dX = features->grad.data();
        for (std::int64_t u = 0; u < C; ++u) {
            for (std::int64_t v = u + 1; v < C; ++v) {
                const double d = A[static_cast<std::size_t>(u * C + v)];
                if (d <= 0.0) continue;
                const double w = (Gc[static_cast<std::size_t>(u * C + v)] +
                                  Gc[static_cast<std::size_t>(v * C + u)]) /
                                 d;
                const double* xu = X + u * D;
                const double* xv = X + v * D;
                double* du = dX + u * D;
                double* dv = dX + v * D;
                for (std::int64_t t = 0; t < D; ++t) {
                    const double delta = w * (xu[t] - xv[t]);
                    du[t] += delta;
                    dv[t] -= delta;
                }
            }
        }
    };

    check_finite(centered, "bdc_matrix");
    auto out = Tensor::from_data({C, C}, std::move(centered));
    if (grad_enabled() && features->requires_grad) {
        out->requires_grad = true;
        out->parents = {features};
        out->backward_fn = std::move(bw);
    }
    return out;
}

TensorPtr prototype_mean(const std::vector<TensorPtr>& support) {
    if (support.empty()) throw std::invalid_argument("prototype_mean: empty support set");
    for (const auto& m : support) {
        if (!same_shape(*m, *support.front())) {
            throw std::invalid_argument("prototype_mean: mismatched matrix shapes");
        }
    }
    if (support.size() == 1) return support.front();
    TensorPtr acc = support[0];
    for (std::size_t i = 1; i < support.size(); ++i) acc = ops::add(acc, support[i]);
    return ops::scale(acc, 1.0 / static_cast<double>(support.size()));
}

TensorPtr bdc_score(const TensorPtr& query, const TensorPtr& prototype) {
    if (!same_shape(*query, *prototype)) {
        throw std::invalid_argument("bdc_score: shape mismatch " + query->shape_str() + " vs " +
                                    prototype->shape_str());
    }
    return ops::sum(ops::mul(query, prototype));
}

}  // namespace causalfew
