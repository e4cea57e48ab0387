#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "causalfew/labels.hpp"
#include "causalfew/rng.hpp"

namespace causalfew {

enum class Subset : int { Train = 0, Val = 1, Test = 2 };
enum class Experiment { TwoWay, FourWay };
enum class Phase { Train, Val, Test };
enum class LabelSpace { Gleason, Isup, Grade };

std::string to_string(Subset s);
std::string to_string(Experiment e);
std::string to_string(Phase p);

struct LabeledImage {
    int id = -1;
    int size = 0;                // square side S
    std::vector<double> pixels;  // S*S row-major
    GleasonScore gs = GleasonScore::GS_3_4;
    IsupGrade isup = IsupGrade::Two;
    TumorGrade grade = TumorGrade::LG;
    int patient_id = -1;
    Subset subset = Subset::Train;
    // synthetic-scene metadata (lesion analogue); boxes are r0,c0,r1,c1 half-open
    std::array<int, 4> bbox_a{0, 0, 0, 0};
    std::array<int, 4> bbox_b{0, 0, 0, 0};
    std::vector<double> mask;  // lesion mask, may be empty
};

// derives the coarser labels from the granular one
void assign_labels(LabeledImage& img, GleasonScore gs);

int label_space_size(LabelSpace space);
int class_of(const LabeledImage& img, LabelSpace space);  // index within the space
std::string class_name(LabelSpace space, int class_id);

// Table-driven phase labeling: the 2-way run trains at the four-group
// granularity and evaluates low-vs-high; the 4-way run trains at the granular
// eight classes and evaluates at the four groups.
LabelSpace map_labels(Experiment experiment, Phase phase);
int ways(Experiment experiment, Phase phase);

struct Episode {
    int way = 0, shot = 0, queries = 0;
    LabelSpace space = LabelSpace::Isup;
    std::vector<int> class_ids;                // sampled classes, ascending
    std::vector<const LabeledImage*> support;  // way*shot, grouped by class
    std::vector<const LabeledImage*> query;    // way*queries, grouped by class
    std::vector<int> query_class_pos;          // index into class_ids per query
};

// Uniform class sampling without replacement among classes holding at least
// shot+queries images; classes below that are excluded with a warning.
// Support and query never overlap. Deterministic given the rng state.
Episode sample_episode(const std::vector<const LabeledImage*>& pool, LabelSpace space, int way,
                       int shot, int queries, Rng& rng,
                       std::vector<std::string>* warnings = nullptr);

// one JSON line with image ids, for exact replay
std::string episode_to_json(const Episode& episode, int task_id);

struct TaskRecord {
    int task_id = 0;
    std::vector<int> class_ids;
    std::vector<std::vector<double>> scores;  // query x way
    std::vector<int> labels;                  // position of each query's class in class_ids
};

// Scores one episode: returns per-query rows of per-class scores.
using EpisodeScorer = std::function<std::vector<std::vector<double>>(const Episode&, int task_id)>;

// Samples n_tasks episodes from the subset matching `phase` and collects the
// scorer's outputs for metric aggregation. Training-side weight updates live
// inside the scorer closure; this loop only drives sampling and recording.
std::vector<TaskRecord> run_phase(const EpisodeScorer& scorer,
                                  const std::vector<LabeledImage>& images, Experiment experiment,
                                  Phase phase, int n_tasks, int shot, int queries,
                                  std::uint64_t seed, std::vector<std::string>* warnings = nullptr,
                                  bool parallel = false);

// pool restricted to one subset
std::vector<const LabeledImage*> subset_pool(const std::vector<LabeledImage>& images,
                                             Subset subset);

// throws std::runtime_error when a patient appears in more than one subset
void verify_no_patient_leakage(const std::vector<LabeledImage>& images);

}  // namespace causalfew
