#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "causalfew/dataset_io.hpp"
#include "causalfew/metrics.hpp"
#include "causalfew/preprocess.hpp"
#include "causalfew/synthetic.hpp"

using namespace causalfew;

namespace {

// band-limited peak readout: the lesion disk is the only structure whose
// intensity lands between the clutter ceiling and the anchor ring
double band_peak(const std::vector<double>& pixels) {
    double peak = 0.0;
    for (const double v : pixels) {
        if (v > 0.30 && v < 0.93) peak = std::max(peak, v);
    }
    return peak;
}

}  // namespace

TEST_CASE("noise-free scenes: a pixel-level readout separates classes perfectly") {
    SyntheticSceneSpec spec;
    spec.noise_level = 0.0;
    Rng rng(81);
    const auto images = generate_synthetic(spec, 200, rng);
    // binary: LG vs HG on the band peak
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& img : images) {
        scores.push_back(band_peak(img.pixels));
        labels.push_back(img.grade == TumorGrade::HG);
    }
    CHECK(*binary_auroc(scores, labels) == 1.0);
    // 4-way: per-group separation
    std::vector<std::vector<double>> rows;
    std::vector<int> group;
    for (const auto& img : images) {
        rows.push_back({band_peak(img.pixels)});
        group.push_back(static_cast<int>(img.isup) - 2);
    }
    for (int lo = 0; lo < 3; ++lo) {
        std::vector<double> s;
        std::vector<int> y;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (group[i] == lo || group[i] == lo + 1) {
                s.push_back(rows[i][0]);
                y.push_back(group[i] == lo + 1);
            }
        }
        CHECK(*binary_auroc(s, y) == 1.0);
    }
}

TEST_CASE("planted rule: removing the anchor removes the lesion, never the reverse") {
    SyntheticSceneSpec spec;
    spec.noise_level = 0.0;
    Rng style_rng(82);
    for (int trial = 0; trial < 100; ++trial) {
        const PatientStyle style = sample_patient_style(spec, style_rng);
        const auto gs = static_cast<GleasonScore>(trial % 8);
        // identical rng stream for all three variants of the same scene
        const std::uint64_t scene_seed = substream_seed(99, "scene", trial);
        Rng r1(scene_seed), r2(scene_seed), r3(scene_seed);
        const Scene full = render_scene(spec, style, gs, r1);
        const Scene no_a = render_scene(spec, style, gs, r2, /*remove_a=*/true);
        const Scene no_b = render_scene(spec, style, gs, r3, false, /*remove_b=*/true);
        CHECK(full.has_a);
        CHECK(full.has_b);
        CHECK(!no_a.has_a);
        CHECK(!no_a.has_b);  // the rule: no anchor, no lesion
        CHECK(no_b.has_a);
        CHECK(!no_b.has_b);
        // pixels under the anchor bbox unchanged when only B is removed
        for (int r = full.bbox_a[0]; r < full.bbox_a[2]; ++r) {
            for (int c = full.bbox_a[1]; c < full.bbox_a[3]; ++c) {
                const auto idx = static_cast<std::size_t>(r * spec.image_size + c);
                if (full.lesion_mask[idx] != 0.0) continue;  // overlap belongs to B
                CHECK(no_b.pixels[idx] == full.pixels[idx]);
            }
        }
    }
}

TEST_CASE("asymmetry counts over generated scenes point in the rule's direction") {
    SyntheticSceneSpec spec;
    spec.noise_level = 0.0;
    Rng style_rng(83);
    int c_ab = 0, c_ba = 0;  // scenes where B survives A-removal / A survives B-removal
    for (int trial = 0; trial < 50; ++trial) {
        const PatientStyle style = sample_patient_style(spec, style_rng);
        const std::uint64_t scene_seed = substream_seed(7, "scene", trial);
        Rng r1(scene_seed), r2(scene_seed);
        const Scene no_a = render_scene(spec, style, GleasonScore::GS_4_4, r1, true, false);
        const Scene no_b = render_scene(spec, style, GleasonScore::GS_4_4, r2, false, true);
        if (no_a.has_b) ++c_ab;
        if (no_b.has_a) ++c_ba;
    }
    CHECK(c_ab == 0);
    CHECK(c_ba == 50);
}

TEST_CASE("generated class balance stays within 1%") {
    SyntheticSceneSpec spec;
    Rng rng(84);
    const auto images = generate_synthetic(spec, 10000, rng);
    REQUIRE(images.size() == 10000);
    std::map<GleasonScore, int> counts;
    for (const auto& img : images) counts[img.gs] += 1;
    for (const auto& [gs, count] : counts) {
        CHECK(std::abs(count - 1250) <= 100);
    }
}

TEST_CASE("patients group 4-8 same-class scenes") {
    SyntheticSceneSpec spec;
    Rng rng(85);
    const auto images = generate_synthetic(spec, 400, rng);
    std::map<int, std::vector<const LabeledImage*>> by_patient;
    for (const auto& img : images) by_patient[img.patient_id].push_back(&img);
    int full_groups = 0;
    for (const auto& [pid, members] : by_patient) {
        CHECK(members.size() <= 8);
        for (const auto* m : members) CHECK(m->gs == members[0]->gs);
        if (members.size() >= 4) ++full_groups;
    }
    CHECK(full_groups >= static_cast<int>(by_patient.size()) - 8);  // only tail groups may be small
}

TEST_CASE("generation is deterministic given the seed") {
    SyntheticSceneSpec spec;
    Rng a(42), b(42);
    const auto im1 = generate_synthetic(spec, 64, a);
    const auto im2 = generate_synthetic(spec, 64, b);
    REQUIRE(im1.size() == im2.size());
    for (std::size_t i = 0; i < im1.size(); ++i) {
        CHECK(im1[i].pixels == im2[i].pixels);
        CHECK(im1[i].patient_id == im2[i].patient_id);
    }
}

TEST_CASE("domain shift moves the mean intensity") {
    SyntheticSceneSpec spec;
    Rng rng(86);
    auto images = generate_synthetic(spec, 128, rng);
    double before = 0, after = 0;
    Rng shift_rng(87);
    for (auto& img : images) {
        for (const double v : img.pixels) before += v;
        apply_domain_shift(img, 0.3, shift_rng);
        for (const double v : img.pixels) after += v;
    }
    const auto n = static_cast<double>(images.size() * images[0].pixels.size());
    // two-sample style check: the shift is far larger than generator noise
    CHECK(std::abs(after / n - before / n) > 0.01);
}

TEST_CASE("crop window sizes follow spacing exactly") {
    Image2D slice;
    slice.rows = 300;
    slice.cols = 300;
    slice.data.assign(300 * 300, 1.0);
    SliceMeta meta;
    meta.mask = slice;
    SUBCASE("0.5 mm spacing gives a 200x200 crop") {
        meta.px = 0.5;
        meta.py = 0.5;
        const auto out = crop_fov(slice, meta, 100.0);
        REQUIRE(out.has_value());
        CHECK(out->rows == 200);
        CHECK(out->cols == 200);
    }
    SUBCASE("0.78125 mm spacing gives exactly 128 columns") {
        meta.px = 0.78125;
        meta.py = 0.78125;
        const auto out = crop_fov(slice, meta, 100.0);
        REQUIRE(out.has_value());
        CHECK(out->cols == 128);
        CHECK(out->rows == 128);
    }
}

TEST_CASE("crop centers on the mask centroid and zero-pads at borders") {
    Image2D slice;
    slice.rows = 40;
    slice.cols = 40;
    slice.data.assign(40 * 40, 0.0);
    for (int r = 0; r < 40; ++r)
        for (int c = 0; c < 40; ++c) slice.at(r, c) = 1.0 + r * 40 + c;
    SliceMeta meta;
    meta.px = 5.0;  // 100mm / 5 = 20 px window
    meta.py = 5.0;
    meta.mask.rows = 40;
    meta.mask.cols = 40;
    meta.mask.data.assign(40 * 40, 0.0);
    meta.mask.at(0, 0) = 1.0;  // centroid at the corner
    const auto out = crop_fov(slice, meta, 100.0);
    REQUIRE(out.has_value());
    CHECK(out->rows == 20);
    CHECK(out->cols == 20);
    int zeros = 0;
    for (const double v : out->data) zeros += v == 0.0;
    CHECK(zeros > 0);  // padded region
    // centroid pixel value present
    bool found = false;
    for (const double v : out->data) found = found || v == 1.0;
    CHECK(found);
}

TEST_CASE("empty mask skips the slice with a warning") {
    Image2D slice;
    slice.rows = 10;
    slice.cols = 10;
    slice.data.assign(100, 1.0);
    SliceMeta meta;
    meta.mask = slice;
    meta.mask.data.assign(100, 0.0);
    std::vector<std::string> warnings;
    CHECK(!crop_fov(slice, meta, 100.0, &warnings).has_value());
    CHECK(warnings.size() == 1);
}

TEST_CASE("bilinear resize") {
    SUBCASE("same-size input is unchanged") {
        Image2D img;
        img.rows = 8;
        img.cols = 8;
        img.data.resize(64);
        for (std::size_t i = 0; i < 64; ++i) img.data[i] = std::sin(0.3 * i);
        const auto out = resize_bilinear(img, 8);
        for (std::size_t i = 0; i < 64; ++i) CHECK(std::abs(out.data[i] - img.data[i]) < 1e-12);
    }
    SUBCASE("constant image stays constant") {
        Image2D img;
        img.rows = 10;
        img.cols = 10;
        img.data.assign(100, 3.25);
        const auto out = resize_bilinear(img, 4);
        for (const double v : out.data) CHECK(v == doctest::Approx(3.25).epsilon(1e-12));
    }
    SUBCASE("2x downscale of a linear ramp hits pixel midpoints") {
        Image2D img;
        img.rows = 8;
        img.cols = 8;
        img.data.resize(64);
        for (int r = 0; r < 8; ++r)
            for (int c = 0; c < 8; ++c) img.at(r, c) = c;  // ramp along columns
        const auto out = resize_bilinear(img, 4);
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) {
                CHECK(out.at(r, c) == doctest::Approx(2.0 * c + 0.5).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("volume z-score normalization") {
    std::vector<Image2D> volume(3);
    Rng rng(88);
    for (auto& s : volume) {
        s.rows = 6;
        s.cols = 6;
        s.data.resize(36);
        for (double& v : s.data) v = rng.uniform(-3.0, 5.0);
    }
    const auto out = zscore_volume(volume);
    double mean = 0;
    std::int64_t n = 0;
    for (const auto& s : out) {
        for (const double v : s.data) mean += v;
        n += 36;
    }
    mean /= static_cast<double>(n);
    double var = 0;
    for (const auto& s : out)
        for (const double v : s.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-9);

    SUBCASE("constant volume rejected") {
        std::vector<Image2D> flat(2);
        for (auto& s : flat) {
            s.rows = 2;
            s.cols = 2;
            s.data.assign(4, 7.0);
        }
        CHECK_THROWS_AS(zscore_volume(flat), std::invalid_argument);
    }
    SUBCASE("two-value volume maps to -1/+1") {
        std::vector<Image2D> two(1);
        two[0].rows = 1;
        two[0].cols = 2;
        two[0].data = {0.0, 2.0};
        const auto z = zscore_volume(two);
        CHECK(z[0].data[0] == doctest::Approx(-1.0));
        CHECK(z[0].data[1] == doctest::Approx(1.0));
    }
}

TEST_CASE("ratio split: 10 patients at .8/.1/.1 gives 8/1/1") {
    std::vector<LabeledImage> images;
    int id = 0;
    for (int p = 0; p < 10; ++p) {
        for (int i = 0; i < 3; ++i) {
            LabeledImage img;
            img.id = id++;
            img.patient_id = p;
            img.size = 2;
            img.pixels.assign(4, 0.0);
            assign_labels(img, GleasonScore::GS_4_4);
            images.push_back(std::move(img));
        }
    }
    Rng rng(89);
    split_patients(images, {0.8, 0.1, 0.1}, rng);
    std::map<Subset, std::set<int>> patients;
    for (const auto& img : images) patients[img.subset].insert(img.patient_id);
    CHECK(patients[Subset::Train].size() == 8);
    CHECK(patients[Subset::Val].size() == 1);
    CHECK(patients[Subset::Test].size() == 1);
    CHECK_NOTHROW(verify_no_patient_leakage(images));
}

TEST_CASE("count split realizes the full-scale reference counts") {
    // single-image patients make the exact counts realizable
    std::vector<LabeledImage> images;
    const int total = kReferenceSplitCounts[0] + kReferenceSplitCounts[1] + kReferenceSplitCounts[2];
    for (int i = 0; i < total; ++i) {
        LabeledImage img;
        img.id = i;
        img.patient_id = i;
        img.size = 2;
        img.pixels.assign(4, 0.0);
        assign_labels(img, GleasonScore::GS_3_4);
        images.push_back(std::move(img));
    }
    Rng rng(90);
    split_patients_by_counts(images, kReferenceSplitCounts, rng);
    std::array<int, 3> counts{0, 0, 0};
    for (const auto& img : images) counts[static_cast<std::size_t>(img.subset)] += 1;
    CHECK(counts[0] == 1611);
    CHECK(counts[1] == 200);
    CHECK(counts[2] == 238);
    CHECK_NOTHROW(verify_no_patient_leakage(images));
}

TEST_CASE("dataset round trip is bit exact and digests are stable") {
    SyntheticSceneSpec spec;
    Rng rng(91);
    auto images = generate_synthetic(spec, 48, rng);
    Rng split_rng(92);
    split_patients(images, {0.6, 0.2, 0.2}, split_rng);
    const std::string dir = "/tmp/causalfew_ds_test";
    std::filesystem::remove_all(dir);
    write_dataset(dir, images);
    const auto loaded = load_dataset(dir);
    REQUIRE(loaded.size() == images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        CHECK(loaded[i].pixels == images[i].pixels);
        CHECK(loaded[i].mask == images[i].mask);
        CHECK(loaded[i].gs == images[i].gs);
        CHECK(loaded[i].isup == images[i].isup);
        CHECK(loaded[i].subset == images[i].subset);
        CHECK(loaded[i].patient_id == images[i].patient_id);
        CHECK(loaded[i].bbox_b == images[i].bbox_b);
    }
    const auto digest1 = dataset_digest(dir);
    // regenerate with the same seed: identical digest
    const std::string dir2 = "/tmp/causalfew_ds_test2";
    std::filesystem::remove_all(dir2);
    Rng rng2(91);
    auto images2 = generate_synthetic(spec, 48, rng2);
    Rng split_rng2(92);
    split_patients(images2, {0.6, 0.2, 0.2}, split_rng2);
    write_dataset(dir2, images2);
    CHECK(dataset_digest(dir2) == digest1);
}

TEST_CASE("crop-resize-zscore composition keeps the centroid centered") {
    // phantom: bright square centered at a known spot
    Image2D slice;
    slice.rows = 64;
    slice.cols = 64;
    slice.data.assign(64 * 64, 0.0);
    SliceMeta meta;
    meta.px = 2.0;  // 50-px window for 100 mm
    meta.py = 2.0;
    meta.mask.rows = 64;
    meta.mask.cols = 64;
    meta.mask.data.assign(64 * 64, 0.0);
    for (int r = 20; r < 28; ++r) {
        for (int c = 30; c < 38; ++c) {
            slice.at(r, c) = 10.0;
            meta.mask.at(r, c) = 1.0;
        }
    }
    const auto cropped = crop_fov(slice, meta, 100.0);
    REQUIRE(cropped.has_value());
    const auto resized = resize_bilinear(*cropped, 32);
    // centroid of the bright region in the resized frame
    double cr = 0, cc = 0, mass = 0;
    for (int r = 0; r < 32; ++r) {
        for (int c = 0; c < 32; ++c) {
            cr += r * resized.at(r, c);
            cc += c * resized.at(r, c);
            mass += resized.at(r, c);
        }
    }
    cr /= mass;
    cc /= mass;
    const double scale = 32.0 / 50.0;  // one resized pixel per 50/32 source pixels
    CHECK(std::abs(cr - (32.0 / 2 - 0.5)) <= scale);
    CHECK(std::abs(cc - (32.0 / 2 - 0.5)) <= scale);
}
