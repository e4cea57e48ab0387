#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace causalfew {

// Rank-based AUROC (Mann-Whitney): P(score_pos > score_neg) + 0.5 P(tie),
// computed from mid-ranks so it equals brute-force pair counting exactly.
// Returns nullopt when a class is missing.
std::optional<double> binary_auroc(std::span<const double> scores, std::span<const int> labels);

// Per-query class-score rows against integer class labels (column indices).
// Unweighted mean of per-class one-vs-rest AUROCs; classes absent from the
// batch are skipped. Returns nullopt when fewer than 2 classes are present.
std::optional<double> ovr_auroc(const std::vector<std::vector<double>>& scores,
                                std::span<const int> labels);

// Binary reduction of an N-way result: positive class = everything except the
// designated column's class, score = 1 - midrank(designated column)/n.
std::optional<double> class_vs_rest_auroc(const std::vector<std::vector<double>>& scores,
                                          std::span<const int> labels, int target_column);

struct Aggregate {
    double mean = 0.0;
    double sd = 0.0;  // population SD
};

Aggregate aggregate(std::span<const double> task_values);

// "0.500 (0.141)" with 3 decimals
std::string format_mean_sd(const Aggregate& a);

// mid-ranks (1-based, ties averaged)
std::vector<double> midranks(std::span<const double> values);

}  // namespace causalfew
