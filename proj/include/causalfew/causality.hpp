#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "causalfew/tensor.hpp"

namespace causalfew {

// k x k matrix of conditional-probability estimates between feature maps.
// Entry (i,j) = P(F_i | F_j): how likely feature i is, given feature j.
// Generally asymmetric.
struct CausalityMap {
    std::int64_t k = 0;
    std::vector<double> entries;  // row-major

    double at(std::int64_t i, std::int64_t j) const {
        return entries[static_cast<std::size_t>(i * k + j)];
    }
    double& at(std::int64_t i, std::int64_t j) {
        return entries[static_cast<std::size_t>(i * k + j)];
    }
};

enum class CausalityMethod { Max, Lehmer };

// p values exercised by the sweep
inline constexpr std::array<double, 6> kLehmerSweep = {-100.0, -2.0, -1.0, 0.0, 1.0, 100.0};

constexpr double kNormalizeEps = 1e-8;
constexpr double kLehmerEps = 1e-8;

// --- tape ops -------------------------------------------------------------

// Divides every element by the global max over all maps of the image, plus
// eps. Input must be non-negative ([k,n,n] or [B,k,n,n]); all-zero input maps
// to all-zero output. The max participates in the gradient (argmax routing).
TensorPtr normalize_maps(const TensorPtr& maps, double eps = kNormalizeEps);

// [original k maps || factor-weighted k maps] along the channel axis.
// Factors are constants for differentiation; no gradient flows into the
// counting step. Accepts [k,n,n] or [B,k,n,n] (same factors across batch).
TensorPtr mulcat(const TensorPtr& maps, const std::vector<double>& factors);

// As mulcat, with factors first thresholded to {0,1} (1 where factor > 0).
TensorPtr mulcatbool(const TensorPtr& maps, const std::vector<double>& factors);

// --- value computations (no tape) ------------------------------------------

// Generalized Lehmer mean, sum(x^p)/sum(x^(p-1)). Zeros are replaced by eps
// before exponentiation when p <= 1. Both power sums run in log space,
// factored by the max (positive exponent) or min (negative exponent) element,
// so |p| = 100 neither overflows nor underflows.
double lehmer_mean(std::span<const double> x, double p, double eps = kLehmerEps);

// Entry (i,j) = (max F_i * max F_j) / sum F_j; zero when sum F_j = 0.
// Bounded by 1 without clamping for inputs in [0,1].
CausalityMap causality_map_max(std::span<const double> maps, std::int64_t k, std::int64_t d);

// Entry (i,j) = LM_p(F_i x F_j) / LM_p(F_j) over the n^2 * n^2 pairwise
// products, clamped to [0,1]. Uses the power-sum factorization
// sum_{a,b} (F_i[a] F_j[b])^q = sum_a F_i[a]^q * sum_b F_j[b]^q, which cuts
// the cost from O(k^2 d^2) to O(k d + k^2).
CausalityMap causality_map_lehmer(std::span<const double> maps, std::int64_t k, std::int64_t d,
                                  double p, double eps = kLehmerEps);

CausalityMap compute_causality_map(std::span<const double> maps, std::int64_t k, std::int64_t d,
                                   CausalityMethod method, double p);

// Signed asymmetry counts: raw[i] = #{j : (i,j) > (j,i)} - #{j : (j,i) > (i,j)}.
// Ties count for neither side. Sums to zero over i.
std::vector<double> causality_factors_raw(const CausalityMap& cmap);

// ReLU of the raw counts; every weight in [0, k-1].
std::vector<double> causality_factors(const CausalityMap& cmap);

enum class AblationMode { Mulcat, Mulcatbool };

// Random replacement for the causality factors: uniform integers in [0, k-1]
// (mulcat) or uniform {0,1} (mulcatbool). Deterministic given seed.
std::vector<double> ablation_factors(std::int64_t k, AblationMode mode, std::uint64_t seed);

// --- export -----------------------------------------------------------------

// CSV with a leading comment line fixing the orientation:
// row i, column j holds P(F_i | F_j).
std::string causality_map_to_csv(const CausalityMap& cmap);
std::string factors_to_csv(const std::vector<double>& factors);

}  // namespace causalfew
