#include "causalfew/encoder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "causalfew/ops.hpp"
#include "causalfew/rng.hpp"

using nlohmann::json;

namespace causalfew {

int EncoderConfig::pool_stages() const {
    int stages = 0, s = input_size;
    while (s > n) {
        s /= 2;
        ++stages;
    }
    return stages;
}

void EncoderConfig::validate() const {
    if (channel_plan.empty()) throw std::invalid_argument("encoder: empty channel plan");
    if (channel_plan.back() != k) {
        throw std::invalid_argument("encoder: last conv width must equal k");
    }
    if (input_size <= 0 || n <= 0 || input_size % n != 0) {
        throw std::invalid_argument("encoder: input_size must be a multiple of n");
    }
    int s = input_size, stages = 0;
    while (s > n) {
        if (s % 2 != 0) throw std::invalid_argument("encoder: input_size/n must be a power of 2");
        s /= 2;
        ++stages;
    }
    if (stages > static_cast<int>(channel_plan.size())) {
        throw std::invalid_argument("encoder: not enough blocks for the required pooling");
    }
}

EncoderConfig EncoderConfig::desk(int k) {
    EncoderConfig cfg;
    cfg.input_size = 32;
    cfg.channel_plan = {16, 32, 32, k};
    cfg.k = k;
    cfg.n = 4;
    return cfg;
}

EncoderConfig EncoderConfig::full_scale() {
    EncoderConfig cfg;
    cfg.input_size = 128;
    cfg.channel_plan = {16, 32, 64, 128, 512};
    cfg.k = 512;
    cfg.n = 4;
    return cfg;
}

Encoder Encoder::init(const EncoderConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Encoder enc;
    enc.cfg_ = cfg;
    enc.seed_ = seed;
    Rng rng(substream_seed(seed, "encoder-init"));
    int cin = 1;
    for (const int cout : cfg.channel_plan) {
        const std::int64_t fan_in = static_cast<std::int64_t>(cin) * 9;
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::vector<double> w(static_cast<std::size_t>(cout) * cin * 9);
        for (double& v : w) v = rng.uniform(-bound, bound);
        enc.weights_.push_back(
            Tensor::from_data({cout, cin, 3, 3}, std::move(w), /*requires_grad=*/true));
        enc.biases_.push_back(Tensor::zeros({cout}, /*requires_grad=*/true));
        cin = cout;
    }
    return enc;
}

TensorPtr Encoder::forward(const TensorPtr& batch) const {
    if (batch->rank() != 4 || batch->dim(1) != 1 || batch->dim(2) != cfg_.input_size ||
        batch->dim(3) != cfg_.input_size) {
        throw std::invalid_argument("encoder: expected [B,1," + std::to_string(cfg_.input_size) +
                                    "," + std::to_string(cfg_.input_size) + "], got " +
                                    batch->shape_str());
    }
    const int pools = cfg_.pool_stages();
    TensorPtr x = batch;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        x = ops::relu(ops::conv2d(x, weights_[i], biases_[i], 1, 1));
        if (static_cast<int>(i) < pools) x = ops::maxpool2d(x, 2, 2);
    }
    return x;
}

std::vector<TensorPtr> Encoder::parameters() const {
    std::vector<TensorPtr> params;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        params.push_back(weights_[i]);
        params.push_back(biases_[i]);
    }
    return params;
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
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) {
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(blob[offset++])) << (8 * b);
        }
        std::memcpy(&values[i], &bits, 8);
    }
    return values;
}
}  // namespace

void Encoder::save(const std::string& path, int epoch) const {
    json header{{"format", "causalfew-encoder-v1"},
                {"input_size", cfg_.input_size},
                {"channel_plan", cfg_.channel_plan},
                {"k", cfg_.k},
                {"n", cfg_.n},
                {"seed", seed_},
                {"epoch", epoch}};
    std::string blobs;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        append_le(blobs, weights_[i]->data);
        append_le(blobs, biases_[i]->data);
    }
    const std::string head = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
    const std::uint64_t head_len = head.size();
    char len_le[8];
    for (int b = 0; b < 8; ++b) len_le[b] = static_cast<char>((head_len >> (8 * b)) & 0xff);
    out.write("CFCK", 4);
    out.write(len_le, 8);
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    out.write(blobs.data(), static_cast<std::streamsize>(blobs.size()));
}

Encoder Encoder::load(const std::string& path, int* epoch) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read checkpoint " + path);
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, "CFCK", 4) != 0) {
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
    if (header.at("format") != "causalfew-encoder-v1") {
        throw std::runtime_error("unsupported checkpoint format");
    }
    EncoderConfig cfg;
    cfg.input_size = header.at("input_size").get<int>();
    cfg.channel_plan = header.at("channel_plan").get<std::vector<int>>();
    cfg.k = header.at("k").get<int>();
    cfg.n = header.at("n").get<int>();
    std::string blobs((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    Encoder enc;
    enc.cfg_ = cfg;
    enc.seed_ = header.at("seed").get<std::uint64_t>();
    if (epoch) *epoch = header.at("epoch").get<int>();
    std::size_t offset = 0;
    int cin = 1;
    for (const int cout : cfg.channel_plan) {
        const auto w_count = static_cast<std::size_t>(cout) * cin * 9;
        enc.weights_.push_back(Tensor::from_data({cout, cin, 3, 3},
                                                 take_le(blobs, offset, w_count), true));
        enc.biases_.push_back(Tensor::from_data(
            {cout}, take_le(blobs, offset, static_cast<std::size_t>(cout)), true));
        cin = cout;
    }
    if (offset != blobs.size()) throw std::runtime_error("checkpoint blob size mismatch");
    return enc;
}

}  // namespace causalfew
