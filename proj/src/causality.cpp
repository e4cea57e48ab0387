#include "causalfew/causality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "causalfew/ops.hpp"
#include "causalfew/rng.hpp"

namespace causalfew {

namespace {

// log(sum x^q) with every addend scaled into [0,1]. Requires x > 0 when
// q < 0; zeros are fine for q > 0 as long as max(x) > 0.
double log_power_sum(std::span<const double> x, double q) {
    const std::size_t n = x.size();
    if (q == 0.0) return std::log(static_cast<double>(n));
    double pivot;
    if (q > 0.0) {
        pivot = *std::max_element(x.begin(), x.end());
    } else {
        pivot = *std::min_element(x.begin(), x.end());
    }
    double s = 0.0;
    for (const double v : x) s += std::pow(v / pivot, q);
    return q * std::log(pivot) + std::log(s);
}

void validate_maps(std::span<const double> maps, std::int64_t k, std::int64_t d) {
    if (k <= 0 || d <= 0) throw std::invalid_argument("causality map: k and d must be positive");
    if (static_cast<std::int64_t>(maps.size()) != k * d) {
        throw std::invalid_argument("causality map: expected k*d values");
    }
    for (const double v : maps) {
        if (!(v >= 0.0 && v <= 1.0 + 1e-12)) {
            throw std::invalid_argument("causality map: inputs must be normalized to [0,1]");
        }
    }
}

}  // namespace

TensorPtr normalize_maps(const TensorPtr& maps, double eps) {
    for (const double v : maps->data) {
        if (v < 0.0) throw std::invalid_argument("normalize_maps: negative input");
    }
    const TensorPtr peak = ops::max_reduce(maps);
    return ops::div(maps, ops::add_const(peak, eps));
}

TensorPtr mulcat(const TensorPtr& maps, const std::vector<double>& factors) {
    const std::int64_t channels = maps->rank() == 4 ? maps->dim(1) : maps->dim(0);
    if (static_cast<std::int64_t>(factors.size()) != channels) {
        throw std::invalid_argument("mulcat: factor count " + std::to_string(factors.size()) +
                                    " does not match channel count " + std::to_string(channels));
    }
    for (const double f : factors) {
        if (f < 0.0) throw std::invalid_argument("mulcat: factors must be non-negative");
    }
    const TensorPtr f = Tensor::from_data({channels}, factors, /*requires_grad=*/false);
    return ops::concat_channels(maps, ops::mul(maps, f));
}

TensorPtr mulcatbool(const TensorPtr& maps, const std::vector<double>& factors) {
    std::vector<double> gated(factors.size());
    for (std::size_t i = 0; i < factors.size(); ++i) gated[i] = factors[i] > 0.0 ? 1.0 : 0.0;
    return mulcat(maps, gated);
}

double lehmer_mean(std::span<const double> x, double p, double eps) {
    if (x.empty()) throw std::invalid_argument("lehmer_mean: empty vector");
    std::vector<double> work(x.begin(), x.end());
    for (const double v : work) {
        if (v < 0.0) throw std::invalid_argument("lehmer_mean: negative input");
    }
    if (p <= 1.0) {
        for (double& v : work) {
            if (v == 0.0) v = eps;
        }
    }
    const double peak = *std::max_element(work.begin(), work.end());
    if (peak == 0.0) return 0.0;  // only reachable for p > 1
    return std::exp(log_power_sum(work, p) - log_power_sum(work, p - 1.0));
}

CausalityMap causality_map_max(std::span<const double> maps, std::int64_t k, std::int64_t d) {
    validate_maps(maps, k, d);
    std::vector<double> peak(static_cast<std::size_t>(k)), total(static_cast<std::size_t>(k));
    for (std::int64_t i = 0; i < k; ++i) {
        const double* m = maps.data() + i * d;
        double mx = 0.0, s = 0.0;
        for (std::int64_t t = 0; t < d; ++t) {
            mx = std::max(mx, m[t]);
            s += m[t];
        }
        peak[static_cast<std::size_t>(i)] = mx;
        total[static_cast<std::size_t>(i)] = s;
    }
    CausalityMap cmap;
    cmap.k = k;
    cmap.entries.resize(static_cast<std::size_t>(k * k));
    for (std::int64_t i = 0; i < k; ++i) {
        for (std::int64_t j = 0; j < k; ++j) {
            const double sj = total[static_cast<std::size_t>(j)];
            cmap.at(i, j) = sj == 0.0 ? 0.0
                                      : peak[static_cast<std::size_t>(i)] *
                                            peak[static_cast<std::size_t>(j)] / sj;
        }
    }
    return cmap;
}

CausalityMap causality_map_lehmer(std::span<const double> maps, std::int64_t k, std::int64_t d,
                                  double p, double eps) {
    validate_maps(maps, k, d);
    if (!std::isfinite(p)) throw std::invalid_argument("causality_map_lehmer: p must be finite");

    // Per-map log power sums at exponents p and p-1; the pairwise-product
    // sums of Eq.-style enumeration factorize into these.
    const double ninf = -std::numeric_limits<double>::infinity();
    std::vector<double> log_sp(static_cast<std::size_t>(k)), log_sq(static_cast<std::size_t>(k));
    std::vector<bool> dead(static_cast<std::size_t>(k), false);
    std::vector<double> work(static_cast<std::size_t>(d));
    for (std::int64_t i = 0; i < k; ++i) {
        const double* m = maps.data() + i * d;
        std::copy(m, m + d, work.begin());
        if (p <= 1.0) {
            for (double& v : work) {
                if (v == 0.0) v = eps;
            }
        }
        const double peak = *std::max_element(work.begin(), work.end());
        if (peak == 0.0) {  // all-zero map under p > 1: carries no signal
            dead[static_cast<std::size_t>(i)] = true;
            log_sp[static_cast<std::size_t>(i)] = ninf;
            log_sq[static_cast<std::size_t>(i)] = ninf;
            continue;
        }
        log_sp[static_cast<std::size_t>(i)] = log_power_sum(work, p);
        log_sq[static_cast<std::size_t>(i)] = log_power_sum(work, p - 1.0);
    }

    CausalityMap cmap;
    cmap.k = k;
    cmap.entries.resize(static_cast<std::size_t>(k * k));
    for (std::int64_t i = 0; i < k; ++i) {
        for (std::int64_t j = 0; j < k; ++j) {
            if (dead[static_cast<std::size_t>(i)] || dead[static_cast<std::size_t>(j)]) {
                cmap.at(i, j) = 0.0;
                continue;
            }
            const double log_num = (log_sp[static_cast<std::size_t>(i)] +
                                    log_sp[static_cast<std::size_t>(j)]) -
                                   (log_sq[static_cast<std::size_t>(i)] +
                                    log_sq[static_cast<std::size_t>(j)]);
            const double log_den = log_sp[static_cast<std::size_t>(j)] -
                                   log_sq[static_cast<std::size_t>(j)];
            cmap.at(i, j) = std::clamp(std::exp(log_num - log_den), 0.0, 1.0);
        }
    }
    return cmap;
}

CausalityMap compute_causality_map(std::span<const double> maps, std::int64_t k, std::int64_t d,
                                   CausalityMethod method, double p) {
    return method == CausalityMethod::Max ? causality_map_max(maps, k, d)
                                          : causality_map_lehmer(maps, k, d, p);
}

std::vector<double> causality_factors_raw(const CausalityMap& cmap) {
    const std::int64_t k = cmap.k;
    if (static_cast<std::int64_t>(cmap.entries.size()) != k * k || k <= 0) {
        throw std::invalid_argument("causality_factors: map must be square");
    }
    std::vector<double> raw(static_cast<std::size_t>(k), 0.0);
    for (std::int64_t i = 0; i < k; ++i) {
        for (std::int64_t j = i + 1; j < k; ++j) {
            const double forward = cmap.at(i, j), backward = cmap.at(j, i);
            if (forward > backward) {
                raw[static_cast<std::size_t>(i)] += 1.0;
                raw[static_cast<std::size_t>(j)] -= 1.0;
            } else if (backward > forward) {
                raw[static_cast<std::size_t>(i)] -= 1.0;
                raw[static_cast<std::size_t>(j)] += 1.0;
            }
        }
    }
    return raw;
}

std::vector<double> causality_factors(const CausalityMap& cmap) {
    std::vector<double> w = causality_factors_raw(cmap);
    for (double& v : w) v = std::max(0.0, v);
    return w;
}

std::vector<double> ablation_factors(std::int64_t k, AblationMode mode, std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("ablation_factors: k must be >= 1");
    Rng rng(seed);
    std::vector<double> f(static_cast<std::size_t>(k));
    for (double& v : f) {
        v = mode == AblationMode::Mulcat
                ? static_cast<double>(rng.next_below(static_cast<std::uint64_t>(k)))
                : static_cast<double>(rng.next_below(2));
    }
    return f;
}

std::string causality_map_to_csv(const CausalityMap& cmap) {
    std::ostringstream os;
    os.precision(17);
    os << "# entry (row i, col j) = P(F_i | F_j)\n";
    for (std::int64_t i = 0; i < cmap.k; ++i) {
        for (std::int64_t j = 0; j < cmap.k; ++j) {
            os << (j ? "," : "") << cmap.at(i, j);
        }
        os << "\n";
    }
    return os.str();
}

std::string factors_to_csv(const std::vector<double>& factors) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < factors.size(); ++i) os << (i ? "," : "") << factors[i];
    os << "\n";
    return os.str();
}

}  // namespace causalfew
