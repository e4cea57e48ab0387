#pragma once

#include <optional>
#include <ostream>

#include "causalfew/config.hpp"
#include "causalfew/metrics.hpp"

namespace causalfew {

struct TrainLogEntry {
    int task_id = 0;
    int epoch = 0;
    double loss = 0.0;
    double lr = 0.0;
    double alpha = 0.0;
};

struct EvalMetrics {
    std::vector<double> task_auroc;  // 2way: binary (HG positive); 4way: one-vs-rest
    Aggregate auroc;
    std::vector<double> task_class2;  // 4way only: lowest-group-vs-rest reduction
    std::optional<Aggregate> class2;
    int skipped_tasks = 0;
};

struct TrainOutcome {
    Model model;  // best-on-validation weights
    std::vector<AucmState> states;
    int best_epoch = -1;
    double best_val_auroc = -1.0;
    std::vector<TrainLogEntry> log;
    int skipped_tasks = 0;
};

// Episodic training with the piecewise lr schedule and best-on-validation
// checkpoint selection. `log_stream`, when set, receives one JSON line per
// task: {task_id, epoch, loss, lr, alpha}.
TrainOutcome train_model(const RunConfig& cfg, const std::vector<LabeledImage>& data,
                         std::ostream* log_stream = nullptr);

// Task-parallel scoring of n_tasks episodes; read-only over the model.
EvalMetrics evaluate_model(const Model& model, const RunConfig& cfg,
                           const std::vector<LabeledImage>& data, Phase phase, int n_tasks);

// full-scale study results recorded in the output schema as reference
// constants (not desk-scale targets)
struct ReferenceRow {
    const char* setting;
    double two_way, four_way, four_way_low_vs_rest;
};
inline constexpr ReferenceRow kReferenceResults[] = {
    {"none", 0.539, 0.585, 0.586},
    {"mulcat", 0.550, 0.611, 0.712},
    {"mulcatbool", 0.556, 0.614, 0.713},
    {"ablation-mulcat", 0.535, 0.557, 0.557},
    {"ablation-mulcatbool", 0.540, 0.571, 0.612},
};

// results JSON for one run (config echo, metrics, reference constants)
std::string run_results_json(const RunConfig& cfg, const EvalMetrics& test, int best_epoch,
                             double best_val);

}  // namespace causalfew
