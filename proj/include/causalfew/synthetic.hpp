#pragma once

#include <cstdint>
#include <vector>

#include "causalfew/episodes.hpp"
#include "causalfew/rng.hpp"

namespace causalfew {

// Synthetic scenes with a planted causal asymmetry: an anchor ring (artifact
// A) gates a lesion-like disk (artifact B). B only ever appears attached to
// A; removing A removes B, removing B leaves A untouched. Class identity is
// carried by B's intensity/size (severity tier) and by B's bearing from A
// (granular class), so the same scene family supports all three label
// granularities.
struct SyntheticSceneSpec {
    int image_size = 32;
    int n_classes = 8;          // granular classes in use (2..8)
    double noise_level = 0.05;  // additive pixel noise; also scales style jitter
    double domain_shift = 0.0;  // gain/offset/noise perturbation for val/test
};

// per-patient appearance shared by all of a patient's scenes
struct PatientStyle {
    double grad_dx = 0.0, grad_dy = 0.0;  // background gradient direction
    double base = 0.12;
    double ring_thickness = 1.8;
    int n_distractors = 3;
};

struct Scene {
    std::vector<double> pixels;
    std::vector<double> lesion_mask;  // 1 inside artifact B
    std::array<int, 4> bbox_a{0, 0, 0, 0};  // r0,c0,r1,c1 half-open
    std::array<int, 4> bbox_b{0, 0, 0, 0};
    bool has_a = false, has_b = false;
};

PatientStyle sample_patient_style(const SyntheticSceneSpec& spec, Rng& rng);

// remove_a also removes B (the planted rule); remove_b removes only B
Scene render_scene(const SyntheticSceneSpec& spec, const PatientStyle& style, GleasonScore gs,
                   Rng& rng, bool remove_a = false, bool remove_b = false);

// `count` scenes grouped into patients of 4-8 scenes, one class per patient,
// classes balanced to within the patient-size granularity. Subset assignment
// and domain shift are separate steps (see split_patients / apply_domain_shift).
std::vector<LabeledImage> generate_synthetic(const SyntheticSceneSpec& spec, int count, Rng& rng);

// val/test perturbation: intensity gain + offset + extra noise
void apply_domain_shift(LabeledImage& img, double delta, Rng& rng);

}  // namespace causalfew
