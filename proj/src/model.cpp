#include "causalfew/model.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "causalfew/bdc.hpp"
#include "causalfew/ops.hpp"

using nlohmann::json;

namespace causalfew {

std::string to_string(CausalityVariant v) {
    switch (v) {
        case CausalityVariant::None: return "none";
        case CausalityVariant::Mulcat: return "mulcat";
        case CausalityVariant::Mulcatbool: return "mulcatbool";
        case CausalityVariant::AblationMulcat: return "ablation-mulcat";
        case CausalityVariant::AblationMulcatbool: return "ablation-mulcatbool";
    }
    return "?";
}

CausalityVariant variant_from_string(const std::string& s) {
    if (s == "none") return CausalityVariant::None;
    if (s == "mulcat") return CausalityVariant::Mulcat;
    if (s == "mulcatbool") return CausalityVariant::Mulcatbool;
    if (s == "ablation-mulcat") return CausalityVariant::AblationMulcat;
    if (s == "ablation-mulcatbool") return CausalityVariant::AblationMulcatbool;
    throw std::invalid_argument("unknown causality variant '" + s + "'");
}

bool is_ablation(CausalityVariant v) {
    return v == CausalityVariant::AblationMulcat || v == CausalityVariant::AblationMulcatbool;
}

TensorPtr enhance_maps(const Model& model, const TensorPtr& maps, std::uint64_t ablation_seed) {
    const std::int64_t k = maps->dim(0);
    const std::int64_t d = maps->numel() / k;
    // every variant pools normalized maps; the plain one just skips the
    // enhancement, so comparisons isolate the factor weighting itself
    const TensorPtr norm = normalize_maps(maps);
    if (model.pipeline.variant == CausalityVariant::None) return norm;
    switch (model.pipeline.variant) {
        case CausalityVariant::Mulcat:
        case CausalityVariant::Mulcatbool: {
            // factor extraction runs on values only; no gradient flows into it
            const CausalityMap cmap = compute_causality_map(norm->data, k, d,
                                                            model.pipeline.method,
                                                            model.pipeline.p);
            const std::vector<double> factors = causality_factors(cmap);
            return model.pipeline.variant == CausalityVariant::Mulcat ? mulcat(norm, factors)
                                                                      : mulcatbool(norm, factors);
        }
        case CausalityVariant::AblationMulcat:
            return mulcat(norm, ablation_factors(k, AblationMode::Mulcat, ablation_seed));
        case CausalityVariant::AblationMulcatbool:
            return mulcat(norm, ablation_factors(k, AblationMode::Mulcatbool, ablation_seed));
        default:
            return norm;
    }
}

TensorPtr batch_from_images(const std::vector<const LabeledImage*>& images) {
    if (images.empty()) throw std::invalid_argument("batch_from_images: empty batch");
    const int S = images.front()->size;
    std::vector<double> data;
    data.reserve(images.size() * static_cast<std::size_t>(S) * S);
    for (const LabeledImage* img : images) {
        if (img->size != S) throw std::invalid_argument("batch_from_images: mixed image sizes");
        data.insert(data.end(), img->pixels.begin(), img->pixels.end());
    }
    return Tensor::from_data({static_cast<std::int64_t>(images.size()), 1, S, S},
                             std::move(data));
}

EpisodeForward forward_episode(const Model& model, const Episode& episode,
                               std::uint64_t ablation_seed) {
    std::vector<const LabeledImage*> batch_images = episode.support;
    batch_images.insert(batch_images.end(), episode.query.begin(), episode.query.end());
    const TensorPtr batch = batch_from_images(batch_images);
    const TensorPtr feats = model.encoder.forward(batch);

    std::vector<TensorPtr> pooled(batch_images.size());
    for (std::size_t i = 0; i < batch_images.size(); ++i) {
        const TensorPtr maps = ops::slice_batch(feats, static_cast<std::int64_t>(i));
        const std::uint64_t img_seed =
            substream_seed(ablation_seed, "img", static_cast<std::uint64_t>(batch_images[i]->id));
        pooled[i] = bdc_matrix(enhance_maps(model, maps, img_seed));
    }

    const auto way = static_cast<std::size_t>(episode.way);
    const auto shot = static_cast<std::size_t>(episode.shot);
    std::vector<TensorPtr> prototypes(way);
    for (std::size_t c = 0; c < way; ++c) {
        std::vector<TensorPtr> support_mats(pooled.begin() + static_cast<std::ptrdiff_t>(c * shot),
                                            pooled.begin() +
                                                static_cast<std::ptrdiff_t>((c + 1) * shot));
        prototypes[c] = prototype_mean(support_mats);
    }

    EpisodeForward fwd;
    const std::size_t n_query = episode.query.size();
    fwd.score_nodes.resize(n_query);
    fwd.score_values.resize(n_query);
    fwd.labels = episode.query_class_pos;
    for (std::size_t q = 0; q < n_query; ++q) {
        const TensorPtr& query_mat = pooled[way * shot + q];
        fwd.score_nodes[q].resize(way);
        fwd.score_values[q].resize(way);
        for (std::size_t c = 0; c < way; ++c) {
            fwd.score_nodes[q][c] = bdc_score(query_mat, prototypes[c]);
            fwd.score_values[q][c] = fwd.score_nodes[q][c]->data[0];
        }
    }
    return fwd;
}

std::vector<double> representation_values(const Model& model, const LabeledImage& image,
                                          std::uint64_t ablation_seed,
                                          std::vector<std::int64_t>* shape_out) {
    NoGradGuard no_grad;
    const TensorPtr batch = batch_from_images({&image});
    const TensorPtr feats = model.encoder.forward(batch);
    const TensorPtr maps = ops::slice_batch(feats, 0);
    const std::uint64_t img_seed =
        substream_seed(ablation_seed, "img", static_cast<std::uint64_t>(image.id));
    const TensorPtr rep = enhance_maps(model, maps, img_seed);
    if (shape_out) *shape_out = rep->shape;
    return rep->data;
}

std::vector<double> pooled_matrix_values(const Model& model, const LabeledImage& image,
                                         std::uint64_t ablation_seed, std::int64_t* dim_out) {
    NoGradGuard no_grad;
    const TensorPtr batch = batch_from_images({&image});
    const TensorPtr feats = model.encoder.forward(batch);
    const TensorPtr maps = ops::slice_batch(feats, 0);
    const std::uint64_t img_seed =
        substream_seed(ablation_seed, "img", static_cast<std::uint64_t>(image.id));
    const TensorPtr pooled = bdc_matrix(enhance_maps(model, maps, img_seed));
    if (dim_out) *dim_out = pooled->dim(0);
    return pooled->data;
}

namespace {
void append_le(std::string& out, const std::vector<double>& values) {
    for (const double v : values) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
    }
}

std::vector<double> take_le(const std::string& blob, std::size_t& offset, std::size_t count) {
    if (offset + count * 8 > blob.size()) throw std::runtime_error("checkpoint blob truncated");
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) {
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(blob[offset++]))
                    << (8 * b);
        }
        std::memcpy(&values[i], &bits, 8);
    }
    return values;
}
}  // namespace

void save_model(const std::string& path, const Model& model, int epoch,
                const std::vector<AucmState>& states, std::uint64_t seed) {
    const EncoderConfig& ec = model.encoder.config();
    json aucm = json::array();
    for (const auto& st : states) {
        aucm.push_back({{"a", st.a}, {"b", st.b}, {"alpha", st.alpha}, {"margin", st.margin}});
    }
    json header{{"format", "causalfew-model-v1"},
                {"variant", to_string(model.pipeline.variant)},
                {"method", model.pipeline.method == CausalityMethod::Max ? "max" : "lehmer"},
                {"p", model.pipeline.p},
                {"encoder",
                 {{"input_size", ec.input_size},
                  {"channel_plan", ec.channel_plan},
                  {"k", ec.k},
                  {"n", ec.n}}},
                {"seed", seed},
                {"epoch", epoch},
                {"aucm", aucm}};
    std::string blobs;
    for (const auto& p : model.encoder.parameters()) append_le(blobs, p->data);
    const std::string head = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
    const std::uint64_t head_len = head.size();
    char len_le[8];
    for (int b = 0; b < 8; ++b) len_le[b] = static_cast<char>((head_len >> (8 * b)) & 0xff);
    out.write("CFMD", 4);
    out.write(len_le, 8);
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    out.write(blobs.data(), static_cast<std::streamsize>(blobs.size()));
}

Model load_model(const std::string& path, int* epoch, std::vector<AucmState>* states,
                 std::uint64_t* seed) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read checkpoint " + path);
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, "CFMD", 4) != 0) {
        throw std::runtime_error("bad checkpoint magic in " + path);
    }
    char len_le[8];
    in.read(len_le, 8);
    std::uint64_t head_len = 0;
    for (int b = 0; b < 8; ++b) {
        head_len |= static_cast<std::uint64_t>(static_cast<unsigned char>(len_le[b])) << (8 * b);
    }
    std::string head(head_len, '\0');
    in.read(head.data(), static_cast<std::streamsize>(head_len));
    const json header = json::parse(head);
    if (header.at("format") != "causalfew-model-v1") {
        throw std::runtime_error("unsupported checkpoint format");
    }

    Model model;
    model.pipeline.variant = variant_from_string(header.at("variant").get<std::string>());
    model.pipeline.method = header.at("method").get<std::string>() == "max"
                                ? CausalityMethod::Max
                                : CausalityMethod::Lehmer;
    model.pipeline.p = header.at("p").get<double>();
    EncoderConfig ec;
    const auto& ej = header.at("encoder");
    ec.input_size = ej.at("input_size").get<int>();
    ec.channel_plan = ej.at("channel_plan").get<std::vector<int>>();
    ec.k = ej.at("k").get<int>();
    ec.n = ej.at("n").get<int>();
    const std::uint64_t stored_seed = header.at("seed").get<std::uint64_t>();
    model.encoder = Encoder::init(ec, stored_seed);

    std::string blobs((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t offset = 0;
    for (const auto& p : model.encoder.parameters()) {
        p->data = take_le(blobs, offset, p->data.size());
    }
    if (offset != blobs.size()) throw std::runtime_error("checkpoint blob size mismatch");

    if (epoch) *epoch = header.at("epoch").get<int>();
    if (seed) *seed = stored_seed;
    if (states) {
        states->clear();
        for (const auto& sj : header.at("aucm")) {
            AucmState st;
            st.a = sj.at("a").get<double>();
            st.b = sj.at("b").get<double>();
            st.alpha = sj.at("alpha").get<double>();
            st.margin = sj.at("margin").get<double>();
            states->push_back(st);
        }
    }
    return model;
}

}  // namespace causalfew
