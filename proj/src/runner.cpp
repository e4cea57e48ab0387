#include "causalfew/runner.hpp"

#include <algorithm>
#include <unordered_map>
#include <cmath>

#include <json.hpp>

#include "causalfew/ops.hpp"
#include "causalfew/parallel.hpp"

using nlohmann::json;

namespace causalfew {

namespace {

// per-class optimizer states for the training label space
std::vector<AucmState> make_states(const RunConfig& cfg) {
    if (cfg.experiment == Experiment::TwoWay) return {AucmState{}};
    const int n = label_space_size(map_labels(Experiment::FourWay, Phase::Train));
    return std::vector<AucmState>(static_cast<std::size_t>(n));
}

std::vector<std::vector<double>> snapshot_params(const Model& model) {
    std::vector<std::vector<double>> snap;
    for (const auto& p : model.encoder.parameters()) snap.push_back(p->data);
    return snap;
}

void restore_params(Model& model, const std::vector<std::vector<double>>& snap) {
    const auto params = model.encoder.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->data = snap[i];
}

// 2-way episodes reduce the two prototype similarities to one score per
// query: higher-class similarity minus lower-class similarity. Class ids are
// ascending, so index 1 is the severer class (HG at evaluation time).
std::vector<TensorPtr> binary_score_nodes(const EpisodeForward& fwd) {
    std::vector<TensorPtr> out(fwd.score_nodes.size());
    for (std::size_t q = 0; q < fwd.score_nodes.size(); ++q) {
        out[q] = ops::sub(fwd.score_nodes[q][1], fwd.score_nodes[q][0]);
    }
    return out;
}

}  // namespace

TrainOutcome train_model(const RunConfig& cfg, const std::vector<LabeledImage>& data,
                         std::ostream* log_stream) {
    validate(cfg);
    verify_no_patient_leakage(data);

    TrainOutcome out;
    out.model.encoder = Encoder::init(cfg.encoder, cfg.seed);
    out.model.pipeline = cfg.pipeline();
    out.states = make_states(cfg);

    std::vector<std::vector<double>> best_snapshot = snapshot_params(out.model);
    std::vector<AucmState> best_states = out.states;

    for (int epoch = 0; epoch < cfg.optim.epochs; ++epoch) {
        const double lr = pesg_lr(cfg.optim, epoch);
        const auto params = out.model.encoder.parameters();

        auto scorer = [&](const Episode& ep, int task_id) {
            EpisodeForward fwd = forward_episode(
                out.model, ep,
                substream_seed(cfg.seed, "ablation-train", static_cast<std::uint64_t>(epoch)));

            std::optional<LossGraph> graph;
            std::vector<AucmState*> used_states;
            if (cfg.experiment == Experiment::TwoWay) {
                std::vector<int> bin(fwd.labels.size());
                for (std::size_t i = 0; i < fwd.labels.size(); ++i) bin[i] = fwd.labels[i] == 1;
                used_states = {&out.states[0]};
                graph = aucm_loss(binary_score_nodes(fwd), bin, out.states[0], 0);
            } else {
                std::vector<AucmState*> column_states;
                std::vector<int> column_ids;
                for (const int cls : ep.class_ids) {
                    column_states.push_back(&out.states[static_cast<std::size_t>(cls)]);
                    column_ids.push_back(cls);
                }
                graph = multiclass_aucm(fwd.score_nodes, fwd.labels, column_states, column_ids);
                used_states = column_states;
            }
            if (!graph) {
                ++out.skipped_tasks;
                return fwd.score_values;
            }
            graph->loss->backward();
            std::vector<AucmState*> leaf_states;
            for (const auto& leaf : graph->leaves) {
                leaf_states.push_back(cfg.experiment == Experiment::TwoWay
                                          ? &out.states[0]
                                          : &out.states[static_cast<std::size_t>(leaf.class_id)]);
            }
            pesg_step(params, graph->leaves, leaf_states, cfg.optim, epoch);

            double alpha = 0.0;
            for (const AucmState* st : leaf_states) alpha += st->alpha;
            alpha /= static_cast<double>(leaf_states.size());
            out.log.push_back({task_id, epoch, graph->loss->data[0], lr, alpha});
            if (log_stream) {
                *log_stream << json{{"task_id", task_id},
                                    {"epoch", epoch},
                                    {"loss", graph->loss->data[0]},
                                    {"lr", lr},
                                    {"alpha", alpha}}
                                   .dump()
                            << "\n";
            }
            return fwd.score_values;
        };

        run_phase(scorer, data, cfg.experiment, Phase::Train, cfg.train_tasks_per_epoch, 1,
                  cfg.queries, substream_seed(cfg.seed, "train-epoch", static_cast<std::uint64_t>(epoch)),
                  nullptr, /*parallel=*/false);

        const bool last_epoch = epoch + 1 == cfg.optim.epochs;
        if (cfg.val_tasks > 0 && ((epoch + 1) % cfg.val_every == 0 || last_epoch)) {
            const EvalMetrics val = evaluate_model(out.model, cfg, data, Phase::Val, cfg.val_tasks);
            if (val.auroc.mean > out.best_val_auroc) {
                out.best_val_auroc = val.auroc.mean;
                out.best_epoch = epoch;
                best_snapshot = snapshot_params(out.model);
                best_states = out.states;
            }
        }
    }

    if (cfg.val_tasks > 0) {
        restore_params(out.model, best_snapshot);
        out.states = best_states;
    } else {
        out.best_epoch = cfg.optim.epochs - 1;
    }
    return out;
}

EvalMetrics evaluate_model(const Model& model, const RunConfig& cfg,
                           const std::vector<LabeledImage>& data, Phase phase, int n_tasks) {
    const auto phase_tag = static_cast<std::uint64_t>(phase);
    const std::uint64_t ablation_base = substream_seed(cfg.seed, "ablation-eval", phase_tag);
    const Subset subset = phase == Phase::Train  ? Subset::Train
                          : phase == Phase::Val ? Subset::Val
                                                : Subset::Test;

    // An image's pooled matrix does not depend on the episode (ablation draws
    // are per image and phase), so compute each one once up front instead of
    // re-encoding the same images task after task.
    const auto pool = subset_pool(data, subset);
    std::unordered_map<int, std::vector<double>> pooled;
    pooled.reserve(pool.size());
    for (const auto* img : pool) pooled.emplace(img->id, std::vector<double>{});
    parallel_for(0, static_cast<std::int64_t>(pool.size()), [&](std::int64_t i) {
        std::int64_t dim = 0;
        pooled.at(pool[static_cast<std::size_t>(i)]->id) = pooled_matrix_values(
            model, *pool[static_cast<std::size_t>(i)], ablation_base, &dim);
    });

    auto scorer = [&](const Episode& ep, int) {
        std::vector<std::vector<double>> rows(ep.query.size());
        for (std::size_t q = 0; q < ep.query.size(); ++q) {
            const std::vector<double>& qm = pooled.at(ep.query[q]->id);
            rows[q].resize(static_cast<std::size_t>(ep.way));
            for (int c = 0; c < ep.way; ++c) {
                // one-shot prototypes are the support matrices themselves
                const std::vector<double>& pm = pooled.at(ep.support[static_cast<std::size_t>(c)]->id);
                double s = 0.0;
                for (std::size_t t = 0; t < qm.size(); ++t) s += qm[t] * pm[t];
                rows[q][static_cast<std::size_t>(c)] = s;
            }
        }
        return rows;
    };
    const auto records =
        run_phase(scorer, data, cfg.experiment, phase, n_tasks, 1, cfg.queries,
                  substream_seed(cfg.seed, "eval", phase_tag), nullptr, /*parallel=*/true);

    EvalMetrics metrics;
    for (const auto& rec : records) {
        if (cfg.experiment == Experiment::TwoWay) {
            std::vector<double> scores(rec.scores.size());
            std::vector<int> labels(rec.scores.size());
            for (std::size_t q = 0; q < rec.scores.size(); ++q) {
                scores[q] = rec.scores[q][1] - rec.scores[q][0];
                labels[q] = rec.labels[q] == 1;
            }
            const auto auc = binary_auroc(scores, labels);
            if (auc) metrics.task_auroc.push_back(*auc);
            else ++metrics.skipped_tasks;
        } else {
            const auto auc = ovr_auroc(rec.scores, rec.labels);
            if (auc) metrics.task_auroc.push_back(*auc);
            else ++metrics.skipped_tasks;
            // lowest severity group vs rest, when that group was sampled
            const auto it = std::find(rec.class_ids.begin(), rec.class_ids.end(), 0);
            if (phase != Phase::Train && it != rec.class_ids.end()) {
                const int col = static_cast<int>(it - rec.class_ids.begin());
                const auto c2 = class_vs_rest_auroc(rec.scores, rec.labels, col);
                if (c2) metrics.task_class2.push_back(*c2);
            }
        }
    }
    if (!metrics.task_auroc.empty()) metrics.auroc = aggregate(metrics.task_auroc);
    if (!metrics.task_class2.empty()) metrics.class2 = aggregate(metrics.task_class2);
    return metrics;
}

std::string run_results_json(const RunConfig& cfg, const EvalMetrics& test, int best_epoch,
                             double best_val) {
    json ref = json::array();
    for (const auto& row : kReferenceResults) {
        ref.push_back({{"setting", row.setting},
                       {"2way", row.two_way},
                       {"4way", row.four_way},
                       {"4way_low_vs_rest", row.four_way_low_vs_rest}});
    }
    json j{{"config", json::parse(run_config_to_json(cfg))},
           {"best_epoch", best_epoch},
           {"best_val_auroc", best_val},
           {"test",
            {{"auroc_mean", test.auroc.mean},
             {"auroc_sd", test.auroc.sd},
             {"auroc", format_mean_sd(test.auroc)},
             {"tasks", test.task_auroc.size()},
             {"skipped_tasks", test.skipped_tasks}}},
           {"reference_full_scale", ref}};
    if (test.class2) {
        j["test"]["low_vs_rest_mean"] = test.class2->mean;
        j["test"]["low_vs_rest_sd"] = test.class2->sd;
        j["test"]["low_vs_rest"] = format_mean_sd(*test.class2);
    }
    return j.dump(2);
}

}  // namespace causalfew
