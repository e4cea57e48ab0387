#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "causalfew/tensor.hpp"

namespace causalfew {

// Compact convolutional encoder: conv3x3 -> ReLU blocks, with 2x max pooling
// in the first log2(input_size/n) blocks. The final block keeps its n x n
// spatial extent (no global pooling), so feature maps stay two-dimensional.
struct EncoderConfig {
    int input_size = 32;
    std::vector<int> channel_plan = {16, 32, 32, 32};  // conv widths; last = k
    int k = 32;  // feature map count
    int n = 4;   // final spatial size

    int pool_stages() const;
    void validate() const;

    static EncoderConfig desk(int k = 32);
    static EncoderConfig full_scale();  // 128 px in, 512 maps of 4x4 out
};

class Encoder {
public:
    Encoder() = default;
    static Encoder init(const EncoderConfig& cfg, std::uint64_t seed);

    // [B,1,S,S] -> [B,k,n,n]; output is post-ReLU, hence non-negative
    TensorPtr forward(const TensorPtr& batch) const;

    std::vector<TensorPtr> parameters() const;
    const EncoderConfig& config() const { return cfg_; }
    std::uint64_t seed() const { return seed_; }

    // JSON header + raw float64 blobs; round-trips bit-exactly
    void save(const std::string& path, int epoch) const;
    static Encoder load(const std::string& path, int* epoch = nullptr);

private:
    EncoderConfig cfg_;
    std::uint64_t seed_ = 0;
    std::vector<TensorPtr> weights_;  // [Cout,Cin,3,3] per block
    std::vector<TensorPtr> biases_;   // [Cout] per block
};

}  // namespace causalfew
