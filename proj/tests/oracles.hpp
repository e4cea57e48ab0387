// Independent reference implementations used only by tests. Everything here
// is deliberately brute-force and stays clear of the library's code paths.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "causalfew/causality.hpp"

namespace oracle {

// Causality entries by direct enumeration of all d*d pairwise products,
// stable log-space evaluation at 64-bit. Zeros are substituted at the map
// level (p <= 1) before products are formed, mirroring the contract.
inline double log_power_sum_naive(const std::vector<double>& x, double q) {
    if (q == 0.0) return std::log(static_cast<double>(x.size()));
    double pivot = q > 0.0 ? *std::max_element(x.begin(), x.end())
                           : *std::min_element(x.begin(), x.end());
    double s = 0.0;
    for (const double v : x) s += std::pow(v / pivot, q);
    return q * std::log(pivot) + std::log(s);
}

inline double lehmer_naive(const std::vector<double>& x, double p) {
    return std::exp(log_power_sum_naive(x, p) - log_power_sum_naive(x, p - 1.0));
}

inline causalfew::CausalityMap lehmer_cmap_enumerated(const std::vector<double>& maps,
                                                      std::int64_t k, std::int64_t d, double p,
                                                      double eps = 1e-8) {
    std::vector<std::vector<double>> work(static_cast<std::size_t>(k));
    for (std::int64_t i = 0; i < k; ++i) {
        work[static_cast<std::size_t>(i)].assign(maps.begin() + i * d, maps.begin() + (i + 1) * d);
        if (p <= 1.0) {
            for (double& v : work[static_cast<std::size_t>(i)]) {
                if (v == 0.0) v = eps;
            }
        }
    }
    causalfew::CausalityMap cmap;
    cmap.k = k;
    cmap.entries.resize(static_cast<std::size_t>(k * k));
    for (std::int64_t i = 0; i < k; ++i) {
        for (std::int64_t j = 0; j < k; ++j) {
            std::vector<double> products;
            products.reserve(static_cast<std::size_t>(d * d));
            for (const double a : work[static_cast<std::size_t>(i)]) {
                for (const double b : work[static_cast<std::size_t>(j)]) {
                    products.push_back(a * b);
                }
            }
            const double num = lehmer_naive(products, p);
            const double den = lehmer_naive(work[static_cast<std::size_t>(j)], p);
            cmap.at(i, j) = std::clamp(num / den, 0.0, 1.0);
        }
    }
    return cmap;
}

// Eq.-style Max estimator evaluated scalar-by-scalar per pair
inline causalfew::CausalityMap max_cmap_direct(const std::vector<double>& maps, std::int64_t k,
                                               std::int64_t d) {
    causalfew::CausalityMap cmap;
    cmap.k = k;
    cmap.entries.resize(static_cast<std::size_t>(k * k));
    for (std::int64_t i = 0; i < k; ++i) {
        for (std::int64_t j = 0; j < k; ++j) {
            double mi = 0, mj = 0, sj = 0;
            for (std::int64_t t = 0; t < d; ++t) {
                mi = std::max(mi, maps[static_cast<std::size_t>(i * d + t)]);
                mj = std::max(mj, maps[static_cast<std::size_t>(j * d + t)]);
                sj += maps[static_cast<std::size_t>(j * d + t)];
            }
            cmap.at(i, j) = sj == 0.0 ? 0.0 : mi * mj / sj;
        }
    }
    return cmap;
}

// factor counting by explicit pair loops
inline std::vector<double> factors_brute(const causalfew::CausalityMap& cmap, bool relu) {
    const std::int64_t k = cmap.k;
    std::vector<double> out(static_cast<std::size_t>(k), 0.0);
    for (std::int64_t i = 0; i < k; ++i) {
        int causes = 0, caused = 0;
        for (std::int64_t j = 0; j < k; ++j) {
            if (j == i) continue;
            if (cmap.at(i, j) > cmap.at(j, i)) ++causes;
            if (cmap.at(j, i) > cmap.at(i, j)) ++caused;
        }
        double v = causes - caused;
        if (relu) v = std::max(0.0, v);
        out[static_cast<std::size_t>(i)] = v;
    }
    return out;
}

// AUROC by the O(n^2) definition: half credit for ties
inline double auroc_pairs(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    std::int64_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

// Spearman rank correlation with mid-ranks
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    auto rank = [](const std::vector<double>& v) {
        std::vector<std::size_t> order(v.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        std::size_t i = 0;
        while (i < v.size()) {
            std::size_t j = i;
            while (j + 1 < v.size() && v[order[j + 1]] == v[order[i]]) ++j;
            const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t t = i; t <= j; ++t) r[order[t]] = mid;
            i = j + 1;
        }
        return r;
    };
    const auto rx = rank(x), ry = rank(y);
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double cov = 0, vx = 0, vy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        cov += (rx[i] - mx) * (ry[i] - my);
        vx += (rx[i] - mx) * (rx[i] - mx);
        vy += (ry[i] - my) * (ry[i] - my);
    }
    return cov / std::sqrt(vx * vy);
}

}  // namespace oracle
