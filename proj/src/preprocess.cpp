#include "causalfew/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace causalfew {

std::optional<Image2D> crop_fov(const Image2D& slice, const SliceMeta& meta, double fov_mm,
                                std::vector<std::string>* warnings) {
    if (meta.px <= 0.0 || meta.py <= 0.0) {
        throw std::invalid_argument("crop_fov: pixel spacing must be positive");
    }
    if (meta.mask.rows != slice.rows || meta.mask.cols != slice.cols) {
        throw std::invalid_argument("crop_fov: mask shape must match slice");
    }
    double cr = 0.0, cc = 0.0;
    std::int64_t n = 0;
    for (int r = 0; r < slice.rows; ++r) {
        for (int c = 0; c < slice.cols; ++c) {
            if (meta.mask.at(r, c) != 0.0) {
                cr += r;
                cc += c;
                ++n;
            }
        }
    }
    if (n == 0) {
        if (warnings) warnings->push_back("crop_fov: empty mask, slice skipped");
        return std::nullopt;
    }
    cr /= static_cast<double>(n);
    cc /= static_cast<double>(n);

    const int n_rows = static_cast<int>(std::lround(fov_mm / meta.py));
    const int n_cols = static_cast<int>(std::lround(fov_mm / meta.px));
    Image2D out;
    out.rows = n_rows;
    out.cols = n_cols;
    out.data.assign(static_cast<std::size_t>(n_rows) * n_cols, 0.0);
    const int r_start = static_cast<int>(std::lround(cr - (n_rows - 1) / 2.0));
    const int c_start = static_cast<int>(std::lround(cc - (n_cols - 1) / 2.0));
    for (int r = 0; r < n_rows; ++r) {
        const int sr = r_start + r;
        if (sr < 0 || sr >= slice.rows) continue;  // zero padding
        for (int c = 0; c < n_cols; ++c) {
            const int sc = c_start + c;
            if (sc < 0 || sc >= slice.cols) continue;
            out.at(r, c) = slice.at(sr, sc);
        }
    }
    return out;
}

Image2D resize_bilinear(const Image2D& slice, int target) {
    if (slice.rows <= 0 || slice.cols <= 0) {
        throw std::invalid_argument("resize_bilinear: empty input");
    }
    if (target <= 0) throw std::invalid_argument("resize_bilinear: bad target");
    Image2D out;
    out.rows = target;
    out.cols = target;
    out.data.resize(static_cast<std::size_t>(target) * target);
    const double sr = static_cast<double>(slice.rows) / target;
    const double sc = static_cast<double>(slice.cols) / target;
    for (int r = 0; r < target; ++r) {
        // half-pixel-centre mapping: exact identity when scale is 1
        const double src_r = (r + 0.5) * sr - 0.5;
        const int r0 = std::clamp(static_cast<int>(std::floor(src_r)), 0, slice.rows - 1);
        const int r1 = std::min(r0 + 1, slice.rows - 1);
        const double fr = std::clamp(src_r - r0, 0.0, 1.0);
        for (int c = 0; c < target; ++c) {
            const double src_c = (c + 0.5) * sc - 0.5;
            const int c0 = std::clamp(static_cast<int>(std::floor(src_c)), 0, slice.cols - 1);
            const int c1 = std::min(c0 + 1, slice.cols - 1);
            const double fc = std::clamp(src_c - c0, 0.0, 1.0);
            const double top = slice.at(r0, c0) * (1 - fc) + slice.at(r0, c1) * fc;
            const double bot = slice.at(r1, c0) * (1 - fc) + slice.at(r1, c1) * fc;
            out.at(r, c) = top * (1 - fr) + bot * fr;
        }
    }
    return out;
}

std::vector<Image2D> zscore_volume(const std::vector<Image2D>& volume) {
    if (volume.empty()) throw std::invalid_argument("zscore_volume: empty volume");
    double mean = 0.0;
    std::int64_t n = 0;
    for (const auto& s : volume) {
        for (const double v : s.data) mean += v;
        n += static_cast<std::int64_t>(s.data.size());
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& s : volume) {
        for (const double v : s.data) var += (v - mean) * (v - mean);
    }
    var /= static_cast<double>(n);
    if (var == 0.0) {
        throw std::invalid_argument("zscore_volume: zero variance, cannot normalize");
    }
    const double inv_sd = 1.0 / std::sqrt(var);
    std::vector<Image2D> out = volume;
    for (auto& s : out) {
        for (double& v : s.data) v = (v - mean) * inv_sd;
    }
    return out;
}

namespace {

std::vector<std::pair<int, std::vector<std::size_t>>> group_by_patient(
    const std::vector<LabeledImage>& images) {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].patient_id < 0) {
            throw std::invalid_argument("split: every image needs a patient_id");
        }
        groups[images[i].patient_id].push_back(i);
    }
    return {groups.begin(), groups.end()};
}

}  // namespace

void split_patients(std::vector<LabeledImage>& images, const std::array<double, 3>& ratios,
                    Rng& rng) {
    const double total = ratios[0] + ratios[1] + ratios[2];
    if (total <= 0.0 || ratios[0] < 0 || ratios[1] < 0 || ratios[2] < 0) {
        throw std::invalid_argument("split_patients: bad ratios");
    }
    auto groups = group_by_patient(images);
    if (groups.size() < 3) {
        throw std::invalid_argument("split_patients: need at least 3 patients");
    }
    rng.shuffle(groups);
    const auto n = static_cast<double>(groups.size());
    std::size_t n_train = static_cast<std::size_t>(std::lround(n * ratios[0] / total));
    std::size_t n_val = static_cast<std::size_t>(std::lround(n * ratios[1] / total));
    n_train = std::clamp<std::size_t>(n_train, 1, groups.size() - 2);
    n_val = std::clamp<std::size_t>(n_val, 1, groups.size() - n_train - 1);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const Subset subset = g < n_train                ? Subset::Train
                              : g < n_train + n_val      ? Subset::Val
                                                         : Subset::Test;
        for (const std::size_t idx : groups[g].second) images[idx].subset = subset;
    }
}

void split_patients_by_counts(std::vector<LabeledImage>& images,
                              const std::array<int, 3>& counts, Rng& rng) {
    auto groups = group_by_patient(images);
    std::int64_t total = 0;
    for (const auto& g : groups) total += static_cast<std::int64_t>(g.second.size());
    if (total != counts[0] + counts[1] + counts[2]) {
        throw std::runtime_error("split_patients_by_counts: counts do not sum to image total");
    }
    rng.shuffle(groups);
    // largest groups placed first into whichever bin has the most room left
    std::stable_sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
        return a.second.size() > b.second.size();
    });
    std::array<std::int64_t, 3> remaining = {counts[0], counts[1], counts[2]};
    for (const auto& [patient, idxs] : groups) {
        const auto size = static_cast<std::int64_t>(idxs.size());
        int best = -1;
        for (int s = 0; s < 3; ++s) {
            if (remaining[static_cast<std::size_t>(s)] >= size &&
                (best < 0 || remaining[static_cast<std::size_t>(s)] >
                                 remaining[static_cast<std::size_t>(best)])) {
                best = s;
            }
        }
        if (best < 0) {
            throw std::runtime_error(
                "split_patients_by_counts: patient sizes cannot realize the requested counts");
        }
        remaining[static_cast<std::size_t>(best)] -= size;
        for (const std::size_t idx : idxs) images[idx].subset = static_cast<Subset>(best);
    }
}

}  // namespace causalfew
