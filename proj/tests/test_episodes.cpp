#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "causalfew/episodes.hpp"
#include "causalfew/metrics.hpp"
#include "causalfew/synthetic.hpp"

using namespace causalfew;

namespace {

// balanced pool: `per_class` images in each of the 8 granular classes
std::vector<LabeledImage> make_images(int per_class, Subset subset, int size = 4) {
    std::vector<LabeledImage> images;
    int id = 0;
    for (int g = 0; g < kNumGleasonClasses; ++g) {
        for (int i = 0; i < per_class; ++i) {
            LabeledImage img;
            img.id = id++;
            img.size = size;
            img.pixels.assign(static_cast<std::size_t>(size * size), 0.1 * g);
            img.patient_id = g * 1000 + i;
            img.subset = subset;
            assign_labels(img, static_cast<GleasonScore>(g));
            images.push_back(std::move(img));
        }
    }
    return images;
}

}  // namespace

TEST_CASE("gleason-to-isup-to-grade mapping follows the grouping table") {
    CHECK(isup_from_gleason(GleasonScore::GS_3_4) == IsupGrade::Two);
    CHECK(isup_from_gleason(GleasonScore::GS_4_3) == IsupGrade::Three);
    for (const auto gs : {GleasonScore::GS_4_4, GleasonScore::GS_3_5, GleasonScore::GS_5_3}) {
        CHECK(isup_from_gleason(gs) == IsupGrade::Four);
    }
    for (const auto gs : {GleasonScore::GS_4_5, GleasonScore::GS_5_4, GleasonScore::GS_5_5}) {
        CHECK(isup_from_gleason(gs) == IsupGrade::Five);
    }
    CHECK(grade_from_isup(IsupGrade::Two) == TumorGrade::LG);
    for (const auto isup : {IsupGrade::Three, IsupGrade::Four, IsupGrade::Five}) {
        CHECK(grade_from_isup(isup) == TumorGrade::HG);
    }
}

TEST_CASE("every granular class maps to exactly one group and one grade") {
    for (int g = 0; g < kNumGleasonClasses; ++g) {
        LabeledImage img;
        assign_labels(img, static_cast<GleasonScore>(g));
        CHECK(img.isup == isup_from_gleason(img.gs));
        CHECK(img.grade == grade_from_isup(img.isup));
        CHECK((img.grade == TumorGrade::LG) == (img.isup == IsupGrade::Two));
    }
}

TEST_CASE("phase label spaces") {
    CHECK(map_labels(Experiment::TwoWay, Phase::Train) == LabelSpace::Isup);
    CHECK(map_labels(Experiment::TwoWay, Phase::Val) == LabelSpace::Grade);
    CHECK(map_labels(Experiment::TwoWay, Phase::Test) == LabelSpace::Grade);
    CHECK(map_labels(Experiment::FourWay, Phase::Train) == LabelSpace::Gleason);
    CHECK(map_labels(Experiment::FourWay, Phase::Val) == LabelSpace::Isup);
    CHECK(map_labels(Experiment::FourWay, Phase::Test) == LabelSpace::Isup);
    CHECK(label_space_size(LabelSpace::Grade) == 2);
    CHECK(label_space_size(LabelSpace::Isup) == 4);
    CHECK(label_space_size(LabelSpace::Gleason) == 8);
}

TEST_CASE("2-way training episode: 2 distinct group classes, 2 support, 20 query") {
    const auto images = make_images(14, Subset::Train);
    const auto pool = subset_pool(images, Subset::Train);
    Rng rng(71);
    const Episode ep = sample_episode(pool, LabelSpace::Isup, 2, 1, 10, rng);
    CHECK(ep.support.size() == 2);
    CHECK(ep.query.size() == 20);
    CHECK(ep.class_ids.size() == 2);
    CHECK(ep.class_ids[0] != ep.class_ids[1]);
    // support/query disjoint
    std::set<int> support_ids, query_ids;
    for (const auto* s : ep.support) support_ids.insert(s->id);
    for (const auto* q : ep.query) query_ids.insert(q->id);
    for (const int id : support_ids) CHECK(query_ids.count(id) == 0);
    // exactly 10 queries of each sampled class
    for (std::size_t c = 0; c < 2; ++c) {
        int count = 0;
        for (std::size_t q = 0; q < ep.query.size(); ++q) {
            if (ep.query_class_pos[q] == static_cast<int>(c)) ++count;
        }
        CHECK(count == 10);
    }
}

TEST_CASE("4-way test episode uses all four group classes") {
    const auto images = make_images(14, Subset::Test);
    const auto pool = subset_pool(images, Subset::Test);
    Rng rng(72);
    const Episode ep = sample_episode(pool, LabelSpace::Isup, 4, 1, 10, rng);
    CHECK(ep.class_ids == std::vector<int>({0, 1, 2, 3}));
    CHECK(ep.support.size() == 4);
    CHECK(ep.query.size() == 40);
}

TEST_CASE("episode sampling is deterministic given the seed") {
    const auto images = make_images(14, Subset::Train);
    const auto pool = subset_pool(images, Subset::Train);
    auto run = [&](std::uint64_t seed) {
        Rng rng(seed);
        const Episode ep = sample_episode(pool, LabelSpace::Gleason, 4, 1, 10, rng);
        std::vector<int> ids;
        for (const auto* s : ep.support) ids.push_back(s->id);
        for (const auto* q : ep.query) ids.push_back(q->id);
        return ids;
    };
    CHECK(run(5) == run(5));
}

TEST_CASE("classes below shot+queries are excluded with a warning") {
    auto images = make_images(14, Subset::Train);
    // shrink one granular class below 11 images
    std::vector<LabeledImage> trimmed;
    int removed = 0;
    for (auto& img : images) {
        if (img.gs == GleasonScore::GS_5_5 && removed < 10) {
            ++removed;
            continue;
        }
        trimmed.push_back(img);
    }
    const auto pool = subset_pool(trimmed, Subset::Train);
    Rng rng(73);
    std::vector<std::string> warnings;
    for (int t = 0; t < 20; ++t) {
        const Episode ep = sample_episode(pool, LabelSpace::Gleason, 4, 1, 10, rng, &warnings);
        for (const int c : ep.class_ids) CHECK(c != static_cast<int>(GleasonScore::GS_5_5));
    }
    CHECK(!warnings.empty());
}

TEST_CASE("sampling fails when too few classes are eligible") {
    const auto images = make_images(5, Subset::Train);  // 5 < 1+10 per granular class
    const auto pool = subset_pool(images, Subset::Train);
    Rng rng(74);
    CHECK_THROWS_AS(sample_episode(pool, LabelSpace::Gleason, 4, 1, 10, rng), std::runtime_error);
}

TEST_CASE("patient leakage detection") {
    auto images = make_images(3, Subset::Train);
    CHECK_NOTHROW(verify_no_patient_leakage(images));
    images[0].subset = Subset::Val;  // same patient id stays in train via sibling? no siblings here
    auto leaky = make_images(3, Subset::Train);
    leaky.push_back(leaky[0]);
    leaky.back().subset = Subset::Test;
    CHECK_THROWS_AS(verify_no_patient_leakage(leaky), std::runtime_error);
}

TEST_CASE("run_phase with a perfect oracle model reaches task AUROC 1.0") {
    const auto images = make_images(14, Subset::Test);
    // oracle: the query's true class column gets the top score
    EpisodeScorer oracle = [](const Episode& ep, int) {
        std::vector<std::vector<double>> rows;
        for (std::size_t q = 0; q < ep.query.size(); ++q) {
            std::vector<double> row(static_cast<std::size_t>(ep.way), 0.0);
            row[static_cast<std::size_t>(ep.query_class_pos[q])] = 1.0;
            rows.push_back(row);
        }
        return rows;
    };
    const auto records =
        run_phase(oracle, images, Experiment::TwoWay, Phase::Test, 1, 1, 10, 99);
    REQUIRE(records.size() == 1);
    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t q = 0; q < records[0].scores.size(); ++q) {
        scores.push_back(records[0].scores[q][1] - records[0].scores[q][0]);
        labels.push_back(records[0].labels[q] == 1);
    }
    CHECK(*binary_auroc(scores, labels) == 1.0);
}

TEST_CASE("run_phase produces 600 score records deterministically") {
    const auto images = make_images(14, Subset::Test);
    EpisodeScorer constant = [](const Episode& ep, int task) {
        std::vector<std::vector<double>> rows(
            ep.query.size(), std::vector<double>(static_cast<std::size_t>(ep.way), task * 0.5));
        return rows;
    };
    const auto a = run_phase(constant, images, Experiment::TwoWay, Phase::Test, 600, 1, 10, 7);
    const auto b = run_phase(constant, images, Experiment::TwoWay, Phase::Test, 600, 1, 10, 7,
                             nullptr, /*parallel=*/true);
    REQUIRE(a.size() == 600);
    REQUIRE(b.size() == 600);
    for (std::size_t t = 0; t < 600; ++t) {
        CHECK(a[t].class_ids == b[t].class_ids);
        CHECK(a[t].scores == b[t].scores);
        CHECK(a[t].labels == b[t].labels);
    }
}

TEST_CASE("episode manifest line is valid JSON-ish and lists ids") {
    const auto images = make_images(14, Subset::Train);
    const auto pool = subset_pool(images, Subset::Train);
    Rng rng(75);
    const Episode ep = sample_episode(pool, LabelSpace::Isup, 2, 1, 3, rng);
    const std::string line = episode_to_json(ep, 17);
    CHECK(line.find("\"task\":17") != std::string::npos);
    CHECK(line.find("\"support\":[") != std::string::npos);
    CHECK(line.find("\"query\":[") != std::string::npos);
}
