#include "causalfew/gradcam.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "causalfew/bdc.hpp"
#include "causalfew/ops.hpp"
#include "causalfew/preprocess.hpp"

namespace causalfew {

Heatmap grad_cam(const Model& model, const LabeledImage& image,
                 const std::vector<std::vector<double>>& prototypes, std::int64_t proto_dim,
                 int target_class, std::uint64_t ablation_seed) {
    if (target_class < 0 || static_cast<std::size_t>(target_class) >= prototypes.size()) {
        throw std::invalid_argument("grad_cam: bad target class");
    }
    // representation values first (no tape), then a fresh leaf so the
    // backward pass stops exactly at the pooling-stage input
    std::vector<std::int64_t> rep_shape;
    std::vector<double> rep = representation_values(model, image, ablation_seed, &rep_shape);
    const TensorPtr leaf = Tensor::from_data(rep_shape, rep, /*requires_grad=*/true);
    const TensorPtr proto = Tensor::from_data(
        {proto_dim, proto_dim}, prototypes[static_cast<std::size_t>(target_class)]);
    const TensorPtr score = bdc_score(bdc_matrix(leaf), proto);
    score->backward();

    const std::int64_t C = rep_shape[0], H = rep_shape[1], W = rep_shape[2];
    Image2D cam;
    cam.rows = static_cast<int>(H);
    cam.cols = static_cast<int>(W);
    cam.data.assign(static_cast<std::size_t>(H * W), 0.0);
    for (std::int64_t c = 0; c < C; ++c) {
        double w_c = 0.0;  // channel weight: spatial mean of the gradient
        for (std::int64_t t = 0; t < H * W; ++t) {
            w_c += leaf->grad[static_cast<std::size_t>(c * H * W + t)];
        }
        w_c /= static_cast<double>(H * W);
        for (std::int64_t t = 0; t < H * W; ++t) {
            cam.data[static_cast<std::size_t>(t)] +=
                w_c * leaf->data[static_cast<std::size_t>(c * H * W + t)];
        }
    }
    for (double& v : cam.data) v = std::max(0.0, v);

    const Image2D up = resize_bilinear(cam, image.size);
    Heatmap map;
    map.size = image.size;
    map.values = up.data;
    map.target_class = target_class;
    const double peak = *std::max_element(map.values.begin(), map.values.end());
    if (peak <= 0.0) {
        std::fill(map.values.begin(), map.values.end(), 0.0);
        map.all_zero = true;
    } else {
        for (double& v : map.values) v /= peak;
    }
    return map;
}

double heatmap_box_mass(const Heatmap& map, const LabeledImage& image) {
    double total = 0.0, inside = 0.0;
    const int S = map.size;
    auto in_box = [](const std::array<int, 4>& b, int r, int c) {
        return r >= b[0] && r < b[2] && c >= b[1] && c < b[3];
    };
    for (int r = 0; r < S; ++r) {
        for (int c = 0; c < S; ++c) {
            const double v = map.values[static_cast<std::size_t>(r * S + c)];
            total += v;
            if (in_box(image.bbox_a, r, c) || in_box(image.bbox_b, r, c)) inside += v;
        }
    }
    return total > 0.0 ? inside / total : 0.0;
}

namespace {

struct Rgb {
    unsigned char r, g, b;
};

// compact perceptually-uniform ramp; anchors interpolated in integer space
// so output bytes are identical everywhere
Rgb colormap(double v) {
    static constexpr unsigned char anchors[9][3] = {
        {68, 1, 84},   {72, 40, 120},  {62, 74, 137},  {49, 104, 142}, {38, 130, 142},
        {31, 158, 137}, {53, 183, 121}, {109, 205, 89}, {253, 231, 37}};
    v = std::clamp(v, 0.0, 1.0);
    const double pos = v * 8.0;
    const int lo = std::min(7, static_cast<int>(pos));
    const double f = pos - lo;
    auto lerp = [&](int ch) {
        return static_cast<unsigned char>(std::lround(anchors[lo][ch] * (1.0 - f) +
                                                      anchors[lo + 1][ch] * f));
    };
    return {lerp(0), lerp(1), lerp(2)};
}

unsigned char gray_of(double v, double lo, double hi) {
    if (hi <= lo) return 0;
    const double t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
    return static_cast<unsigned char>(std::lround(t * 255.0));
}

}  // namespace

std::string comparison_panel(const std::string& out_dir, const std::string& case_id,
                             const LabeledImage& image,
                             const std::vector<std::optional<Heatmap>>& heatmaps) {
    const int S = image.size;
    for (const auto& h : heatmaps) {
        if (h && h->size != S) throw std::invalid_argument("comparison_panel: size mismatch");
    }
    const int gap = 2;
    const int columns = 2 + static_cast<int>(heatmaps.size());
    const int width = columns * S + (columns - 1) * gap;
    std::vector<Rgb> canvas(static_cast<std::size_t>(S) * width, Rgb{255, 255, 255});

    double lo = image.pixels[0], hi = image.pixels[0];
    for (const double v : image.pixels) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    auto put = [&](int col_index, int r, int c, Rgb px) {
        const int x = col_index * (S + gap) + c;
        canvas[static_cast<std::size_t>(r) * width + x] = px;
    };
    for (int r = 0; r < S; ++r) {
        for (int c = 0; c < S; ++c) {
            const double v = image.pixels[static_cast<std::size_t>(r * S + c)];
            const unsigned char g = gray_of(v, lo, hi);
            put(0, r, c, {g, g, g});
            const unsigned char m =
                image.mask.empty()
                    ? 0
                    : static_cast<unsigned char>(
                          image.mask[static_cast<std::size_t>(r * S + c)] != 0.0 ? 255 : 0);
            put(1, r, c, {m, m, m});
        }
    }
    bool any_zero = false;
    for (std::size_t h = 0; h < heatmaps.size(); ++h) {
        for (int r = 0; r < S; ++r) {
            for (int c = 0; c < S; ++c) {
                Rgb px{40, 40, 40};  // absent variant: flat dark column
                if (heatmaps[h]) {
                    px = colormap(heatmaps[h]->values[static_cast<std::size_t>(r * S + c)]);
                }
                put(2 + static_cast<int>(h), r, c, px);
            }
        }
        if (heatmaps[h] && heatmaps[h]->all_zero) any_zero = true;
    }

    std::filesystem::create_directories(out_dir);
    const std::string name = case_id + (any_zero ? "_zerocam" : "") + ".ppm";
    const std::string path = (std::filesystem::path(out_dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write panel " + path);
    out << "P6\n" << width << " " << S << "\n255\n";
    out.write(reinterpret_cast<const char*>(canvas.data()),
              static_cast<std::streamsize>(canvas.size() * 3));
    return path;
}

}  // namespace causalfew
