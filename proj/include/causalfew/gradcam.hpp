#pragma once

#include <optional>
#include <string>
#include <vector>

#include "causalfew/model.hpp"

namespace causalfew {

struct Heatmap {
    int size = 0;                // input resolution
    std::vector<double> values;  // in [0,1]; max = 1 unless identically zero
    bool all_zero = false;
    int target_class = -1;
};

// Gradient-weighted activation map taken at the pooling-stage input: the
// target score (similarity to the target class prototype) is differentiated
// w.r.t. the enhanced feature set, channel weights are the spatial means of
// those gradients, and the ReLU-gated weighted sum is upsampled to input
// resolution and max-normalized.
//
// `prototypes` are pooled matrices as plain values, one per class.
Heatmap grad_cam(const Model& model, const LabeledImage& image,
                 const std::vector<std::vector<double>>& prototypes, std::int64_t proto_dim,
                 int target_class, std::uint64_t ablation_seed);

// fraction of heatmap mass inside the image's artifact boxes (0 when empty)
double heatmap_box_mass(const Heatmap& map, const LabeledImage& image);

// Five-column panel written as binary PPM: input, lesion mask, then one
// colormapped heatmap per variant (missing variants render as a flat dark
// column). Returns the file path actually written; the name gains a
// "zerocam" flag when any provided heatmap is identically zero.
std::string comparison_panel(const std::string& out_dir, const std::string& case_id,
                             const LabeledImage& image,
                             const std::vector<std::optional<Heatmap>>& heatmaps);

}  // namespace causalfew
