#include "causalfew/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace causalfew {

namespace {

constexpr double kPi = 3.14159265358979323846;

// severity tier 0..3 (= ISUP - 2)
int tier_of(GleasonScore gs) { return static_cast<int>(isup_from_gleason(gs)) - 2; }

struct Disk {
    double cr, cc, radius, intensity;
};

void stamp_disk(std::vector<double>& px, std::vector<double>* mask, int S, const Disk& d) {
    const int r0 = std::max(0, static_cast<int>(std::floor(d.cr - d.radius - 1)));
    const int r1 = std::min(S, static_cast<int>(std::ceil(d.cr + d.radius + 2)));
    const int c0 = std::max(0, static_cast<int>(std::floor(d.cc - d.radius - 1)));
    const int c1 = std::min(S, static_cast<int>(std::ceil(d.cc + d.radius + 2)));
    for (int r = r0; r < r1; ++r) {
        for (int c = c0; c < c1; ++c) {
            const double dr = r - d.cr, dc = c - d.cc;
            if (dr * dr + dc * dc <= d.radius * d.radius) {
                auto& v = px[static_cast<std::size_t>(r * S + c)];
                v = std::max(v, d.intensity);  // hard edge: intensity is exact
                if (mask) (*mask)[static_cast<std::size_t>(r * S + c)] = 1.0;
            }
        }
    }
}

void stamp_ring(std::vector<double>& px, int S, double cr, double cc, double radius,
                double thickness, double intensity) {
    const double outer = radius, inner = std::max(0.5, radius - thickness);
    const int r0 = std::max(0, static_cast<int>(std::floor(cr - outer - 1)));
    const int r1 = std::min(S, static_cast<int>(std::ceil(cr + outer + 2)));
    const int c0 = std::max(0, static_cast<int>(std::floor(cc - outer - 1)));
    const int c1 = std::min(S, static_cast<int>(std::ceil(cc + outer + 2)));
    for (int r = r0; r < r1; ++r) {
        for (int c = c0; c < c1; ++c) {
            const double dr = r - cr, dc = c - cc;
            const double d2 = dr * dr + dc * dc;
            if (d2 <= outer * outer && d2 >= inner * inner) {
                auto& v = px[static_cast<std::size_t>(r * S + c)];
                v = std::max(v, intensity);
            }
        }
    }
}

void stamp_soft_blob(std::vector<double>& px, int S, double cr, double cc, double radius,
                     double intensity) {
    const int r0 = std::max(0, static_cast<int>(std::floor(cr - 3 * radius)));
    const int r1 = std::min(S, static_cast<int>(std::ceil(cr + 3 * radius)));
    const int c0 = std::max(0, static_cast<int>(std::floor(cc - 3 * radius)));
    const int c1 = std::min(S, static_cast<int>(std::ceil(cc + 3 * radius)));
    for (int r = r0; r < r1; ++r) {
        for (int c = c0; c < c1; ++c) {
            const double dr = r - cr, dc = c - cc;
            const double g = intensity * std::exp(-(dr * dr + dc * dc) / (2 * radius * radius));
            auto& v = px[static_cast<std::size_t>(r * S + c)];
            v = std::max(v, g);
        }
    }
}

std::array<int, 4> clamp_box(int S, double cr, double cc, double radius) {
    return {std::clamp(static_cast<int>(std::floor(cr - radius)), 0, S),
            std::clamp(static_cast<int>(std::floor(cc - radius)), 0, S),
            std::clamp(static_cast<int>(std::ceil(cr + radius)) + 1, 0, S),
            std::clamp(static_cast<int>(std::ceil(cc + radius)) + 1, 0, S)};
}

}  // namespace

PatientStyle sample_patient_style(const SyntheticSceneSpec& spec, Rng& rng) {
    PatientStyle st;
    const double angle = rng.uniform(0.0, 2 * kPi);
    st.grad_dx = std::cos(angle);
    st.grad_dy = std::sin(angle);
    st.base = 0.12 + spec.noise_level * rng.uniform(-0.04, 0.04);
    st.ring_thickness = 1.3 + rng.uniform(-0.15, 0.15);
    st.n_distractors = 2 + static_cast<int>(rng.next_below(3));
    return st;
}

Scene render_scene(const SyntheticSceneSpec& spec, const PatientStyle& style, GleasonScore gs,
                   Rng& rng, bool remove_a, bool remove_b) {
    const int S = spec.image_size;
    if (S < 16) throw std::invalid_argument("render_scene: image_size must be >= 16");
    Scene scene;
    scene.pixels.assign(static_cast<std::size_t>(S * S), 0.0);
    scene.lesion_mask.assign(static_cast<std::size_t>(S * S), 0.0);

    // background: base level plus a gentle directional gradient
    for (int r = 0; r < S; ++r) {
        for (int c = 0; c < S; ++c) {
            const double u = (c - S / 2.0) / S, v = (r - S / 2.0) / S;
            scene.pixels[static_cast<std::size_t>(r * S + c)] =
                style.base + 0.03 * (style.grad_dx * u + style.grad_dy * v);
        }
    }

    // distractors: class-independent clutter, dim and low-mass
    for (int i = 0; i < style.n_distractors; ++i) {
        const double cr = rng.uniform(3.0, S - 3.0);
        const double cc = rng.uniform(3.0, S - 3.0);
        const double rad = rng.uniform(1.2, 2.2);
        const double inten = rng.uniform(0.08, 0.20);
        stamp_soft_blob(scene.pixels, S, cr, cc, rad, inten);
    }

    // anchor ring (artifact A); sampled even when removed so the rng stream
    // stays aligned between a scene and its intervention variants
    const double margin = 11.0;
    const double acr = rng.uniform(margin, S - margin);
    const double acc = rng.uniform(margin, S - margin);
    const double ring_radius = 4.2;
    const int tier = tier_of(gs);
    const double bearing = 2 * kPi * (static_cast<int>(gs) / 8.0) + rng.uniform(-0.2, 0.2);
    const double b_radius = 2.6 + 0.8 * tier;
    const double dist = ring_radius + b_radius + 1.0;
    const double bcr = std::clamp(acr + dist * std::sin(bearing), b_radius + 0.5, S - b_radius - 0.5);
    const double bcc = std::clamp(acc + dist * std::cos(bearing), b_radius + 0.5, S - b_radius - 0.5);
    const double b_intensity =
        0.34 + 0.18 * tier + spec.noise_level * 0.2 * rng.uniform(-0.5, 0.5);

    if (!remove_a) {
        stamp_ring(scene.pixels, S, acr, acc, ring_radius, style.ring_thickness, 0.95);
        scene.has_a = true;
        scene.bbox_a = clamp_box(S, acr, acc, ring_radius);
        if (!remove_b) {  // B exists only in A's presence: the planted rule
            stamp_disk(scene.pixels, &scene.lesion_mask, S,
                       {bcr, bcc, b_radius, b_intensity});
            scene.has_b = true;
            scene.bbox_b = clamp_box(S, bcr, bcc, b_radius);
        }
    }

    if (spec.noise_level > 0.0) {
        for (double& v : scene.pixels) v += spec.noise_level * rng.normal();
    }
    return scene;
}

std::vector<LabeledImage> generate_synthetic(const SyntheticSceneSpec& spec, int count, Rng& rng) {
    if (spec.n_classes < 2 || spec.n_classes > kNumGleasonClasses) {
        throw std::invalid_argument("generate_synthetic: n_classes must be in [2,8]");
    }
    if (count < spec.n_classes) {
        throw std::invalid_argument("generate_synthetic: count smaller than class count");
    }
    std::vector<LabeledImage> out;
    out.reserve(static_cast<std::size_t>(count));
    int next_patient = 0, next_image = 0;
    // per-class image budget; remainder spread over the first classes
    for (int cls = 0; cls < spec.n_classes; ++cls) {
        int budget = count / spec.n_classes + (cls < count % spec.n_classes ? 1 : 0);
        const auto gs = static_cast<GleasonScore>(cls);
        while (budget > 0) {
            const int patient_size =
                std::min<int>(budget, 4 + static_cast<int>(rng.next_below(5)));
            const PatientStyle style = sample_patient_style(spec, rng);
            const int patient_id = next_patient++;
            for (int s = 0; s < patient_size; ++s) {
                const Scene scene = render_scene(spec, style, gs, rng);
                LabeledImage img;
                img.id = next_image++;
                img.size = spec.image_size;
                img.pixels = scene.pixels;
                img.mask = scene.lesion_mask;
                img.bbox_a = scene.bbox_a;
                img.bbox_b = scene.bbox_b;
                img.patient_id = patient_id;
                assign_labels(img, gs);
                out.push_back(std::move(img));
            }
            budget -= patient_size;
        }
    }
    return out;
}

void apply_domain_shift(LabeledImage& img, double delta, Rng& rng) {
    if (delta <= 0.0) return;
    const double gain = 1.0 - 0.35 * delta;
    const double offset = 0.18 * delta;
    for (double& v : img.pixels) v = v * gain + offset + 0.08 * delta * rng.normal();
}

}  // namespace causalfew
