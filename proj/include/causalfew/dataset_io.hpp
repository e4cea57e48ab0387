#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "causalfew/episodes.hpp"

namespace causalfew {

// Dataset directory layout: manifest.jsonl plus one raw little-endian float64
// plane per image (and per mask when present). Bit-exact across platforms.

void write_raw_f64(const std::string& path, const std::vector<double>& values);
std::vector<double> read_raw_f64(const std::string& path, std::size_t expected_count);

void write_dataset(const std::string& dir, const std::vector<LabeledImage>& images);
std::vector<LabeledImage> load_dataset(const std::string& dir);

// FNV-1a over the manifest and every raw file, for reproducibility checks
std::uint64_t dataset_digest(const std::string& dir);

struct DatasetSummary {
    int images = 0, patients = 0;
    std::array<int, 3> per_subset{0, 0, 0};
    std::array<int, 8> per_gleason{};
};
DatasetSummary summarize(const std::vector<LabeledImage>& images);

}  // namespace causalfew
