#include "causalfew/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <stdexcept>

namespace causalfew {

std::vector<double> midranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        // positions i..j (0-based) share the mid-rank; +1 converts to 1-based
        const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
        i = j + 1;
    }
    return ranks;
}

std::optional<double> binary_auroc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw std::invalid_argument("binary_auroc: scores/labels size mismatch");
    }
    std::size_t n_pos = 0, n_neg = 0;
    for (const int y : labels) (y ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;
    const std::vector<double> ranks = midranks(scores);
    double rank_sum_pos = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i]) rank_sum_pos += ranks[i];
    }
    const double np = static_cast<double>(n_pos);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

std::optional<double> ovr_auroc(const std::vector<std::vector<double>>& scores,
                                std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw std::invalid_argument("ovr_auroc: scores/labels size mismatch");
    }
    if (scores.empty()) return std::nullopt;
    const std::size_t n_cols = scores.front().size();
    std::set<int> present(labels.begin(), labels.end());
    if (present.size() < 2) return std::nullopt;
    double total = 0.0;
    int used = 0;
    for (std::size_t c = 0; c < n_cols; ++c) {
        if (!present.count(static_cast<int>(c))) continue;  // absent class: skipped
        std::vector<double> col(scores.size());
        std::vector<int> ind(scores.size());
        for (std::size_t q = 0; q < scores.size(); ++q) {
            col[q] = scores[q][c];
            ind[q] = labels[q] == static_cast<int>(c) ? 1 : 0;
        }
        const auto a = binary_auroc(col, ind);
        if (a) {
            total += *a;
            ++used;
        }
    }
    if (used == 0) return std::nullopt;
    return total / static_cast<double>(used);
}

std::optional<double> class_vs_rest_auroc(const std::vector<std::vector<double>>& scores,
                                          std::span<const int> labels, int target_column) {
    if (scores.size() != labels.size()) {
        throw std::invalid_argument("class_vs_rest_auroc: scores/labels size mismatch");
    }
    if (scores.empty()) return std::nullopt;
    if (target_column < 0 || static_cast<std::size_t>(target_column) >= scores.front().size()) {
        throw std::invalid_argument("class_vs_rest_auroc: bad target column");
    }
    std::vector<double> target_scores(scores.size());
    for (std::size_t q = 0; q < scores.size(); ++q) target_scores[q] = scores[q][static_cast<std::size_t>(target_column)];
    const std::vector<double> ranks = midranks(target_scores);
    const double n = static_cast<double>(scores.size());
    std::vector<double> reduced(scores.size());
    std::vector<int> rest_positive(scores.size());
    for (std::size_t q = 0; q < scores.size(); ++q) {
        reduced[q] = 1.0 - ranks[q] / n;
        rest_positive[q] = labels[q] != target_column ? 1 : 0;
    }
    return binary_auroc(reduced, rest_positive);
}

Aggregate aggregate(std::span<const double> task_values) {
    if (task_values.empty()) throw std::invalid_argument("aggregate: empty input");
    const double n = static_cast<double>(task_values.size());
    double mean = 0.0;
    for (const double v : task_values) mean += v;
    mean /= n;
    double var = 0.0;
    for (const double v : task_values) var += (v - mean) * (v - mean);
    var /= n;
    return {mean, std::sqrt(var)};
}

std::string format_mean_sd(const Aggregate& a) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f (%.3f)", a.mean, a.sd);
    return buf;
}

}  // namespace causalfew
