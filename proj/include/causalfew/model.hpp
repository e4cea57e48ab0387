#pragma once

#include <string>
#include <vector>

#include "causalfew/causality.hpp"
#include "causalfew/encoder.hpp"
#include "causalfew/episodes.hpp"
#include "causalfew/training.hpp"

namespace causalfew {

enum class CausalityVariant { None, Mulcat, Mulcatbool, AblationMulcat, AblationMulcatbool };

std::string to_string(CausalityVariant v);
CausalityVariant variant_from_string(const std::string& s);
bool is_ablation(CausalityVariant v);

struct PipelineConfig {
    CausalityVariant variant = CausalityVariant::None;
    CausalityMethod method = CausalityMethod::Max;
    double p = 0.0;  // Lehmer parameter
};

// Encoder plus the feature-enhancement head. The representation entering the
// pooling stage has k channels for the plain variant and 2k for every
// causality-driven variant.
struct Model {
    Encoder encoder;
    PipelineConfig pipeline;

    int rep_channels() const {
        return pipeline.variant == CausalityVariant::None ? encoder.config().k
                                                          : 2 * encoder.config().k;
    }
};

// [k,n,n] maps node -> representation node entering the pooling stage.
// Causality variants normalize, derive per-image factors (stop-gradient) and
// apply the multiply-and-concatenate enhancement; the plain variant passes
// the raw maps through.
TensorPtr enhance_maps(const Model& model, const TensorPtr& maps, std::uint64_t ablation_seed);

struct EpisodeForward {
    std::vector<std::vector<TensorPtr>> score_nodes;  // query x way, [1] tensors
    std::vector<std::vector<double>> score_values;
    std::vector<int> labels;  // query class positions
};

// Full episode pass: batch-encode support+query, enhance per image, build
// one prototype per class from the support pooling matrices, score every
// query against every prototype (Frobenius inner product).
EpisodeForward forward_episode(const Model& model, const Episode& episode,
                               std::uint64_t ablation_seed);

// image batch tensor [B,1,S,S] from labeled images
TensorPtr batch_from_images(const std::vector<const LabeledImage*>& images);

// representation values for one image (no tape), for the explanation path
std::vector<double> representation_values(const Model& model, const LabeledImage& image,
                                          std::uint64_t ablation_seed,
                                          std::vector<std::int64_t>* shape_out);

// pooled matrix values for one image (no tape); dim_out receives the matrix side
std::vector<double> pooled_matrix_values(const Model& model, const LabeledImage& image,
                                         std::uint64_t ablation_seed, std::int64_t* dim_out);

// checkpoint: JSON header (pipeline + encoder config + optimizer state) +
// raw float64 weight blobs; round-trips bit-exactly
void save_model(const std::string& path, const Model& model, int epoch,
                const std::vector<AucmState>& states, std::uint64_t seed);
Model load_model(const std::string& path, int* epoch = nullptr,
                 std::vector<AucmState>* states = nullptr, std::uint64_t* seed = nullptr);

}  // namespace causalfew
