#include "causalfew/dataset_io.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace causalfew {

void write_raw_f64(const std::string& path, const std::vector<double>& values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    std::vector<unsigned char> buf(values.size() * 8);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, &values[i], 8);
        for (int b = 0; b < 8; ++b) buf[i * 8 + b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xff);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

std::vector<double> read_raw_f64(const std::string& path, std::size_t expected_count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<unsigned char> buf(expected_count * 8);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
        throw std::runtime_error("short read on " + path);
    }
    std::vector<double> values(expected_count);
    for (std::size_t i = 0; i < expected_count; ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(buf[i * 8 + b]) << (8 * b);
        std::memcpy(&values[i], &bits, 8);
    }
    return values;
}

void write_dataset(const std::string& dir, const std::vector<LabeledImage>& images) {
    fs::create_directories(dir);
    std::ofstream manifest(fs::path(dir) / "manifest.jsonl");
    if (!manifest) throw std::runtime_error("cannot write manifest in " + dir);
    for (const auto& img : images) {
        const std::string stem = "img_" + std::to_string(img.id);
        write_raw_f64((fs::path(dir) / (stem + ".f64")).string(), img.pixels);
        json j{{"id", img.id},
               {"file", stem + ".f64"},
               {"size", img.size},
               {"gs", to_string(img.gs)},
               {"patient", img.patient_id},
               {"subset", to_string(img.subset)},
               {"bbox_a", img.bbox_a},
               {"bbox_b", img.bbox_b}};
        if (!img.mask.empty()) {
            write_raw_f64((fs::path(dir) / (stem + ".mask.f64")).string(), img.mask);
            j["mask_file"] = stem + ".mask.f64";
        }
        manifest << j.dump() << "\n";
    }
}

std::vector<LabeledImage> load_dataset(const std::string& dir) {
    std::ifstream manifest(fs::path(dir) / "manifest.jsonl");
    if (!manifest) throw std::runtime_error("no manifest.jsonl in " + dir);
    std::vector<LabeledImage> images;
    std::string line;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        LabeledImage img;
        img.id = j.at("id").get<int>();
        img.size = j.at("size").get<int>();
        img.patient_id = j.at("patient").get<int>();
        const std::string subset = j.at("subset").get<std::string>();
        img.subset = subset == "train" ? Subset::Train : subset == "val" ? Subset::Val : Subset::Test;
        assign_labels(img, gleason_from_string(j.at("gs").get<std::string>()));
        const auto count = static_cast<std::size_t>(img.size) * static_cast<std::size_t>(img.size);
        img.pixels = read_raw_f64((fs::path(dir) / j.at("file").get<std::string>()).string(), count);
        if (j.contains("bbox_a")) {
            const auto a = j.at("bbox_a");
            for (int i = 0; i < 4; ++i) img.bbox_a[static_cast<std::size_t>(i)] = a.at(i).get<int>();
        }
        if (j.contains("bbox_b")) {
            const auto b = j.at("bbox_b");
            for (int i = 0; i < 4; ++i) img.bbox_b[static_cast<std::size_t>(i)] = b.at(i).get<int>();
        }
        if (j.contains("mask_file")) {
            img.mask =
                read_raw_f64((fs::path(dir) / j.at("mask_file").get<std::string>()).string(), count);
        }
        images.push_back(std::move(img));
    }
    return images;
}

std::uint64_t dataset_digest(const std::string& dir) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path().filename().string());
    }
    std::sort(files.begin(), files.end());
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](const char* data, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(data[i]);
            h *= 0x100000001b3ull;
        }
    };
    for (const auto& name : files) {
        mix(name.data(), name.size());
        std::ifstream in(fs::path(dir) / name, std::ios::binary);
        std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        mix(content.data(), content.size());
    }
    return h;
}

DatasetSummary summarize(const std::vector<LabeledImage>& images) {
    DatasetSummary s;
    std::set<int> patients;
    for (const auto& img : images) {
        ++s.images;
        patients.insert(img.patient_id);
        s.per_subset[static_cast<std::size_t>(img.subset)] += 1;
        s.per_gleason[static_cast<std::size_t>(img.gs)] += 1;
    }
    s.patients = static_cast<int>(patients.size());
    return s;
}

}  // namespace causalfew
