#include "causalfew/episodes.hpp"

#include <algorithm>

#include "causalfew/parallel.hpp"
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace causalfew {

std::string to_string(Subset s) {
    switch (s) {
        case Subset::Train: return "train";
        case Subset::Val: return "val";
        case Subset::Test: return "test";
    }
    return "?";
}

std::string to_string(Experiment e) { return e == Experiment::TwoWay ? "2way" : "4way"; }

std::string to_string(Phase p) {
    switch (p) {
        case Phase::Train: return "train";
        case Phase::Val: return "val";
        case Phase::Test: return "test";
    }
    return "?";
}

void assign_labels(LabeledImage& img, GleasonScore gs) {
    img.gs = gs;
    img.isup = isup_from_gleason(gs);
    img.grade = grade_from_isup(img.isup);
}

int label_space_size(LabelSpace space) {
    switch (space) {
        case LabelSpace::Gleason: return kNumGleasonClasses;
        case LabelSpace::Isup: return kNumIsupClasses;
        case LabelSpace::Grade: return kNumGradeClasses;
    }
    return 0;
}

int class_of(const LabeledImage& img, LabelSpace space) {
    switch (space) {
        case LabelSpace::Gleason: return static_cast<int>(img.gs);
        case LabelSpace::Isup: return static_cast<int>(img.isup) - 2;
        case LabelSpace::Grade: return static_cast<int>(img.grade);
    }
    return -1;
}

std::string class_name(LabelSpace space, int class_id) {
    switch (space) {
        case LabelSpace::Gleason: return "GS " + to_string(static_cast<GleasonScore>(class_id));
        case LabelSpace::Isup: return "ISUP " + std::to_string(class_id + 2);
        case LabelSpace::Grade: return class_id == 0 ? "LG" : "HG";
    }
    return "?";
}

LabelSpace map_labels(Experiment experiment, Phase phase) {
    if (experiment == Experiment::TwoWay) {
        return phase == Phase::Train ? LabelSpace::Isup : LabelSpace::Grade;
    }
    return phase == Phase::Train ? LabelSpace::Gleason : LabelSpace::Isup;
}

int ways(Experiment experiment, Phase) { return experiment == Experiment::TwoWay ? 2 : 4; }

Episode sample_episode(const std::vector<const LabeledImage*>& pool, LabelSpace space, int way,
                       int shot, int queries, Rng& rng, std::vector<std::string>* warnings) {
    if (way < 2 || shot < 1 || queries < 1) {
        throw std::invalid_argument("sample_episode: bad way/shot/queries");
    }
    const int n_classes = label_space_size(space);
    std::vector<std::vector<const LabeledImage*>> by_class(static_cast<std::size_t>(n_classes));
    Subset subset = Subset::Train;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const LabeledImage* img = pool[i];
        if (i == 0) subset = img->subset;
        if (img->subset != subset) {
            throw std::invalid_argument("sample_episode: pool mixes subsets");
        }
        by_class[static_cast<std::size_t>(class_of(*img, space))].push_back(img);
    }
    std::vector<int> eligible;
    for (int c = 0; c < n_classes; ++c) {
        if (static_cast<int>(by_class[static_cast<std::size_t>(c)].size()) >= shot + queries) {
            eligible.push_back(c);
        } else if (!by_class[static_cast<std::size_t>(c)].empty() && warnings) {
            warnings->push_back("class " + class_name(space, c) + " has fewer than " +
                                std::to_string(shot + queries) + " images; excluded");
        }
    }
    if (static_cast<int>(eligible.size()) < way) {
        throw std::runtime_error("sample_episode: only " + std::to_string(eligible.size()) +
                                 " classes have enough images for a " + std::to_string(way) +
                                 "-way episode");
    }

    Episode ep;
    ep.way = way;
    ep.shot = shot;
    ep.queries = queries;
    ep.space = space;
    const auto pick = rng.sample_without_replacement(eligible.size(), static_cast<std::size_t>(way));
    for (const std::size_t p : pick) ep.class_ids.push_back(eligible[p]);
    std::sort(ep.class_ids.begin(), ep.class_ids.end());

    for (std::size_t ci = 0; ci < ep.class_ids.size(); ++ci) {
        const auto& bucket = by_class[static_cast<std::size_t>(ep.class_ids[ci])];
        const auto idx =
            rng.sample_without_replacement(bucket.size(), static_cast<std::size_t>(shot + queries));
        for (int s = 0; s < shot; ++s) ep.support.push_back(bucket[idx[static_cast<std::size_t>(s)]]);
        for (int q = 0; q < queries; ++q) {
            ep.query.push_back(bucket[idx[static_cast<std::size_t>(shot + q)]]);
            ep.query_class_pos.push_back(static_cast<int>(ci));
        }
    }
    return ep;
}

std::string episode_to_json(const Episode& episode, int task_id) {
    std::ostringstream os;
    os << "{\"task\":" << task_id << ",\"way\":" << episode.way << ",\"shot\":" << episode.shot
       << ",\"queries\":" << episode.queries << ",\"classes\":[";
    for (std::size_t i = 0; i < episode.class_ids.size(); ++i) {
        os << (i ? "," : "") << "\"" << class_name(episode.space, episode.class_ids[i]) << "\"";
    }
    os << "],\"support\":[";
    for (std::size_t i = 0; i < episode.support.size(); ++i) {
        os << (i ? "," : "") << episode.support[i]->id;
    }
    os << "],\"query\":[";
    for (std::size_t i = 0; i < episode.query.size(); ++i) {
        os << (i ? "," : "") << episode.query[i]->id;
    }
    os << "]}";
    return os.str();
}

std::vector<const LabeledImage*> subset_pool(const std::vector<LabeledImage>& images,
                                             Subset subset) {
    std::vector<const LabeledImage*> pool;
    for (const auto& img : images) {
        if (img.subset == subset) pool.push_back(&img);
    }
    return pool;
}

std::vector<TaskRecord> run_phase(const EpisodeScorer& scorer,
                                  const std::vector<LabeledImage>& images, Experiment experiment,
                                  Phase phase, int n_tasks, int shot, int queries,
                                  std::uint64_t seed, std::vector<std::string>* warnings,
                                  bool parallel) {
    const Subset subset = phase == Phase::Train  ? Subset::Train
                          : phase == Phase::Val ? Subset::Val
                                                : Subset::Test;
    const auto pool = subset_pool(images, subset);
    const LabelSpace space = map_labels(experiment, phase);
    const int way = ways(experiment, phase);
    Rng rng(substream_seed(seed, "episodes/" + to_string(phase)));

    // Episodes are sampled up front from their own rng stream, so the record
    // layout is identical whether scoring runs serially or task-parallel.
    std::vector<Episode> episodes;
    episodes.reserve(static_cast<std::size_t>(n_tasks));
    for (int task = 0; task < n_tasks; ++task) {
        episodes.push_back(sample_episode(pool, space, way, shot, queries, rng, warnings));
    }

    std::vector<TaskRecord> records(static_cast<std::size_t>(n_tasks));
    auto score_one = [&](std::int64_t task) {
        const Episode& ep = episodes[static_cast<std::size_t>(task)];
        TaskRecord& rec = records[static_cast<std::size_t>(task)];
        rec.task_id = static_cast<int>(task);
        rec.class_ids = ep.class_ids;
        rec.scores = scorer(ep, static_cast<int>(task));
        rec.labels = ep.query_class_pos;
    };
    if (parallel) {
        parallel_for(0, n_tasks, score_one);
    } else {
        for (int task = 0; task < n_tasks; ++task) score_one(task);
    }
    return records;
}

void verify_no_patient_leakage(const std::vector<LabeledImage>& images) {
    std::map<int, Subset> seen;
    for (const auto& img : images) {
        const auto it = seen.find(img.patient_id);
        if (it == seen.end()) {
            seen.emplace(img.patient_id, img.subset);
        } else if (it->second != img.subset) {
            throw std::runtime_error("patient " + std::to_string(img.patient_id) +
                                     " appears in multiple subsets");
        }
    }
}

}  // namespace causalfew
