#pragma once

#include <array>
#include <optional>
#include <vector>

#include "causalfew/episodes.hpp"
#include "causalfew/rng.hpp"

namespace causalfew {

// rectangular grayscale plane
struct Image2D {
    int rows = 0, cols = 0;
    std::vector<double> data;

    double at(int r, int c) const { return data[static_cast<std::size_t>(r * cols + c)]; }
    double& at(int r, int c) { return data[static_cast<std::size_t>(r * cols + c)]; }
};

struct SliceMeta {
    double px = 1.0, py = 1.0;  // mm per pixel along x (cols) and y (rows)
    Image2D mask;               // nonzero marks the structure of interest
};

// Fixed-footprint crop around the mask centroid: N_cols = fov_mm/px and
// N_rows = fov_mm/py, rounded to nearest, window clamped and zero-padded at
// the borders. Returns nullopt (with a warning) when the mask is empty.
std::optional<Image2D> crop_fov(const Image2D& slice, const SliceMeta& meta, double fov_mm = 100.0,
                                std::vector<std::string>* warnings = nullptr);

// bilinear resample to target x target; the identity when sizes already match
Image2D resize_bilinear(const Image2D& slice, int target = 128);

// (x - mean)/sd with mean/sd pooled over every pixel of every slice.
// Throws std::invalid_argument when the pooled SD is zero.
std::vector<Image2D> zscore_volume(const std::vector<Image2D>& volume);

// Patient-level split by ratios over patients. No patient spans subsets.
void split_patients(std::vector<LabeledImage>& images, const std::array<double, 3>& ratios,
                    Rng& rng);

// Patient-level split hitting exact image counts (train,val,test); throws
// std::runtime_error when the patient sizes cannot realize the counts.
void split_patients_by_counts(std::vector<LabeledImage>& images,
                              const std::array<int, 3>& counts, Rng& rng);

// reference full-scale subset sizes recorded as config defaults
inline constexpr std::array<int, 3> kReferenceSplitCounts = {1611, 200, 238};

}  // namespace causalfew
