// Experiment driver: dataset generation, training/evaluation, causality
// sweeps, ablations, and explanation panels.
//
// Exit codes: 0 success, 2 config error, 3 data error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "causalfew/config.hpp"
#include "causalfew/dataset_io.hpp"
#include "causalfew/gradcam.hpp"
#include "causalfew/parallel.hpp"
#include "causalfew/preprocess.hpp"
#include "causalfew/runner.hpp"
#include "causalfew/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace causalfew;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct GenerateArgs {
    std::string out_dir;
    int count = 1600;
    int image_size = 32;
    int classes = 8;
    double noise = 0.05;
    double domain_shift = 0.3;
    std::uint64_t seed = 1;
    std::vector<double> ratios = {0.7, 0.15, 0.15};
};

int cmd_generate(const GenerateArgs& args) {
    if (args.ratios.size() != 3) {
        std::cerr << "error: --ratios needs exactly three values\n";
        return kExitConfig;
    }
    SyntheticSceneSpec spec;
    spec.image_size = args.image_size;
    spec.n_classes = args.classes;
    spec.noise_level = args.noise;
    spec.domain_shift = args.domain_shift;

    Rng rng(substream_seed(args.seed, "generate"));
    std::vector<LabeledImage> images = generate_synthetic(spec, args.count, rng);
    Rng split_rng(substream_seed(args.seed, "split"));
    split_patients(images, {args.ratios[0], args.ratios[1], args.ratios[2]}, split_rng);
    Rng shift_rng(substream_seed(args.seed, "shift"));
    for (auto& img : images) {
        if (img.subset != Subset::Train) apply_domain_shift(img, spec.domain_shift, shift_rng);
    }
    verify_no_patient_leakage(images);
    write_dataset(args.out_dir, images);

    const DatasetSummary s = summarize(images);
    json summary{{"images", s.images},
                 {"patients", s.patients},
                 {"train", s.per_subset[0]},
                 {"val", s.per_subset[1]},
                 {"test", s.per_subset[2]},
                 {"digest", dataset_digest(args.out_dir)}};
    json per_class = json::object();
    for (int g = 0; g < spec.n_classes; ++g) {
        per_class["GS " + to_string(static_cast<GleasonScore>(g))] =
            s.per_gleason[static_cast<std::size_t>(g)];
    }
    summary["per_class"] = per_class;
    std::cout << summary.dump(2) << "\n";
    return 0;
}

RunConfig load_config_with_overrides(const std::string& config_path, const json& overrides) {
    json merged = json::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot read config file " + config_path);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        merged = json::parse(text);
    }
    for (const auto& [key, value] : overrides.items()) {
        if (value.is_object()) {
            for (const auto& [k2, v2] : value.items()) merged[key][k2] = v2;
        } else {
            merged[key] = value;
        }
    }
    return parse_run_config(merged.dump());
}

std::vector<LabeledImage> load_data_or_throw(const std::string& dir) {
    if (dir.empty()) throw DataError("no data directory given (set data_dir)");
    if (!fs::exists(fs::path(dir) / "manifest.jsonl")) {
        throw DataError("no dataset at " + dir);
    }
    auto images = load_dataset(dir);
    if (images.empty()) throw DataError("dataset at " + dir + " is empty");
    verify_no_patient_leakage(images);
    return images;
}

void write_episode_manifest(const RunConfig& cfg, const std::vector<LabeledImage>& data,
                            Phase phase, int n_tasks, const std::string& path) {
    const auto pool = subset_pool(data, phase == Phase::Train  ? Subset::Train
                                        : phase == Phase::Val ? Subset::Val
                                                              : Subset::Test);
    const LabelSpace space = map_labels(cfg.experiment, phase);
    Rng rng(substream_seed(cfg.seed, "episodes/" + to_string(phase)));
    std::ofstream out(path);
    for (int task = 0; task < n_tasks; ++task) {
        const Episode ep = sample_episode(pool, space, ways(cfg.experiment, phase), 1,
                                          cfg.queries, rng);
        out << episode_to_json(ep, task) << "\n";
    }
}

int run_train_eval(const RunConfig& cfg, bool do_train) {
    const auto data = load_data_or_throw(cfg.data_dir);
    fs::create_directories(cfg.out_dir.empty() ? "." : cfg.out_dir);
    const fs::path out_dir = cfg.out_dir.empty() ? "." : cfg.out_dir;

    Model model;
    int best_epoch = -1;
    double best_val = -1.0;
    if (do_train) {
        std::ofstream log(out_dir / "train_log.jsonl");
        const TrainOutcome outcome = train_model(cfg, data, &log);
        model = outcome.model;
        best_epoch = outcome.best_epoch;
        best_val = outcome.best_val_auroc;
        save_model((out_dir / "model.ckpt").string(), model, best_epoch, outcome.states, cfg.seed);
    } else {
        model = load_model((out_dir / "model.ckpt").string(), &best_epoch);
    }

    const EvalMetrics test = evaluate_model(model, cfg, data, Phase::Test, cfg.test_tasks);
    std::ofstream results(out_dir / "results.json");
    const std::string results_text = run_results_json(cfg, test, best_epoch, best_val);
    results << results_text << "\n";
    write_episode_manifest(cfg, data, Phase::Test, cfg.test_tasks,
                           (out_dir / "test_episodes.jsonl").string());
    std::cout << results_text << "\n";
    return 0;
}

struct SweepRow {
    std::string setting;
    std::optional<CausalityMethod> method;
    std::optional<double> p;
    double val_auroc = -1.0;
    EvalMetrics test;
    bool failed = false;
    std::string error;
};

int cmd_sweep(const RunConfig& base, bool ablation_only) {
    const auto data = load_data_or_throw(base.data_dir);
    const fs::path out_dir = base.out_dir.empty() ? "." : base.out_dir;
    fs::create_directories(out_dir);

    struct Candidate {
        CausalityVariant variant;
        std::optional<CausalityMethod> method;
        std::optional<double> p;
    };
    std::vector<Candidate> candidates;
    if (!ablation_only) {
        candidates.push_back({CausalityVariant::None, std::nullopt, std::nullopt});
        for (const CausalityVariant v : {CausalityVariant::Mulcat, CausalityVariant::Mulcatbool}) {
            candidates.push_back({v, CausalityMethod::Max, std::nullopt});
            for (const double p : kLehmerSweep) candidates.push_back({v, CausalityMethod::Lehmer, p});
        }
    }
    candidates.push_back({CausalityVariant::AblationMulcat, std::nullopt, std::nullopt});
    candidates.push_back({CausalityVariant::AblationMulcatbool, std::nullopt, std::nullopt});

    // all candidates trained; the best of each causality setting is selected
    // on meta-validation
    std::map<std::string, SweepRow> best_by_setting;
    for (const auto& cand : candidates) {
        RunConfig cfg = base;
        cfg.variant = cand.variant;
        cfg.method = cand.method;
        cfg.p = cand.p;
        SweepRow row;
        row.setting = to_string(cand.variant);
        row.method = cand.method;
        row.p = cand.p;
        try {
            validate(cfg);
            const TrainOutcome outcome = train_model(cfg, data, nullptr);
            row.val_auroc = outcome.best_val_auroc;
            row.test = evaluate_model(outcome.model, cfg, data, Phase::Test, cfg.test_tasks);
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
        }
        std::cerr << "sweep: " << row.setting
                  << (row.method ? (*row.method == CausalityMethod::Max ? " max" : " lehmer") : "")
                  << (row.p ? " p=" + std::to_string(static_cast<int>(*row.p)) : "")
                  << (row.failed ? " FAILED: " + row.error
                                 : " val=" + std::to_string(row.val_auroc))
                  << "\n";
        const auto it = best_by_setting.find(row.setting);
        if (it == best_by_setting.end() || (!row.failed && row.val_auroc > it->second.val_auroc)) {
            if (it == best_by_setting.end() || !row.failed || it->second.failed) {
                best_by_setting[row.setting] = row;
            }
        }
    }

    std::map<std::string, const ReferenceRow*> refs;
    for (const auto& r : kReferenceResults) refs[r.setting] = &r;
    const bool two_way = base.experiment == Experiment::TwoWay;

    std::ofstream csv(out_dir / "sweep_results.csv");
    csv << "setting,experiment,method,p,auroc_mean,auroc_sd,low_vs_rest_mean,low_vs_rest_sd,"
           "val_auroc,reference_full_scale,reference_low_vs_rest,status\n";
    const std::vector<std::string> order = {"none", "mulcat", "mulcatbool", "ablation-mulcat",
                                            "ablation-mulcatbool"};
    for (const auto& setting : order) {
        const auto it = best_by_setting.find(setting);
        if (it == best_by_setting.end()) continue;
        const SweepRow& row = it->second;
        csv << setting << "," << to_string(base.experiment) << ",";
        csv << (row.method ? (*row.method == CausalityMethod::Max ? "max" : "lehmer") : "") << ",";
        if (row.p) csv << *row.p;
        csv << ",";
        if (row.failed) {
            csv << ",,,,," << refs[setting]->two_way << ",,failed: " << row.error << "\n";
            continue;
        }
        csv << row.test.auroc.mean << "," << row.test.auroc.sd << ",";
        if (row.test.class2) csv << row.test.class2->mean << "," << row.test.class2->sd;
        else csv << ",";
        csv << "," << row.val_auroc << ",";
        csv << (two_way ? refs[setting]->two_way : refs[setting]->four_way) << ",";
        if (!two_way) csv << refs[setting]->four_way_low_vs_rest;
        csv << ",ok\n";
    }
    std::cout << "wrote " << (out_dir / "sweep_results.csv").string() << "\n";
    return 0;
}

int cmd_explain(const RunConfig& base, const std::string& baseline_ckpt,
                const std::string& mulcat_ckpt, const std::string& mulcatbool_ckpt,
                int max_cases) {
    const auto data = load_data_or_throw(base.data_dir);
    const fs::path out_dir = base.out_dir.empty() ? "." : base.out_dir;
    fs::create_directories(out_dir);

    const std::array<Model, 3> models = {load_model(baseline_ckpt), load_model(mulcat_ckpt),
                                         load_model(mulcatbool_ckpt)};
    const auto pool = subset_pool(data, Subset::Test);
    const LabelSpace space = map_labels(base.experiment, Phase::Test);
    Rng rng(substream_seed(base.seed, "explain-episodes"));

    int emitted = 0;
    json mass_log = json::array();
    for (int task = 0; task < 50 && emitted < max_cases; ++task) {
        const Episode ep =
            sample_episode(pool, space, ways(base.experiment, Phase::Test), 1, base.queries, rng);
        // per-model prototypes (values), one per class
        std::array<std::vector<std::vector<double>>, 3> protos;
        std::int64_t dim = 0;
        for (std::size_t m = 0; m < 3; ++m) {
            for (std::size_t c = 0; c < ep.class_ids.size(); ++c) {
                protos[m].push_back(pooled_matrix_values(
                    models[m], *ep.support[c],
                    substream_seed(base.seed, "explain-abl", m, static_cast<std::uint64_t>(task)),
                    &dim));
            }
        }
        for (std::size_t q = 0; q < ep.query.size() && emitted < max_cases; ++q) {
            const LabeledImage& img = *ep.query[q];
            const int truth = ep.query_class_pos[static_cast<std::size_t>(q)];
            bool all_correct = true;
            for (std::size_t m = 0; m < 3 && all_correct; ++m) {
                std::int64_t d2 = 0;
                const auto qv = pooled_matrix_values(
                    models[m], img,
                    substream_seed(base.seed, "explain-abl", m, static_cast<std::uint64_t>(task)),
                    &d2);
                int argmax = 0;
                double best = -1e308;
                for (std::size_t c = 0; c < protos[m].size(); ++c) {
                    double s = 0.0;
                    for (std::size_t t = 0; t < qv.size(); ++t) s += qv[t] * protos[m][c][t];
                    if (s > best) {
                        best = s;
                        argmax = static_cast<int>(c);
                    }
                }
                all_correct = argmax == truth;
            }
            if (!all_correct) continue;  // panels only for mutually-correct cases
            std::vector<std::optional<Heatmap>> maps;
            json masses = json::object();
            static const char* names[3] = {"baseline", "mulcat", "mulcatbool"};
            for (std::size_t m = 0; m < 3; ++m) {
                std::int64_t d = 0;
                (void)d;
                Heatmap h = grad_cam(models[m], img, protos[m], dim, truth,
                                     substream_seed(base.seed, "explain-abl", m,
                                                    static_cast<std::uint64_t>(task)));
                masses[names[m]] = heatmap_box_mass(h, img);
                maps.push_back(std::move(h));
            }
            const std::string case_id = "case_" + std::to_string(img.id) + "_t" +
                                        std::to_string(task) + "_q" + std::to_string(q);
            const std::string path = comparison_panel(out_dir.string(), case_id, img, maps);
            masses["panel"] = path;
            masses["image"] = img.id;
            mass_log.push_back(masses);
            ++emitted;
        }
    }
    std::ofstream mass_out(out_dir / "explain_masses.json");
    mass_out << mass_log.dump(2) << "\n";
    if (emitted == 0) {
        std::cout << "no mutually-correct cases found; nothing to explain\n";
    } else {
        std::cout << "wrote " << emitted << " panels to " << out_dir.string() << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"causality-driven feature enhancement for one-shot classifiers"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "generate a synthetic dataset");
    generate->add_option("--out", gen.out_dir, "output directory")->required();
    generate->add_option("--count", gen.count, "number of images");
    generate->add_option("--image-size", gen.image_size, "square image size");
    generate->add_option("--classes", gen.classes, "granular class count (2-8)");
    generate->add_option("--noise", gen.noise, "pixel noise level");
    generate->add_option("--domain-shift", gen.domain_shift, "val/test shift strength");
    generate->add_option("--seed", gen.seed, "rng seed");
    generate->add_option("--ratios", gen.ratios, "train/val/test patient ratios")->expected(3);

    std::string config_path, data_dir, out_dir, experiment, causality, method;
    std::optional<double> p_value;
    std::optional<std::uint64_t> seed;
    std::optional<int> epochs, train_tasks, val_tasks, test_tasks;
    auto add_run_options = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--data", data_dir, "dataset directory");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--experiment", experiment, "2way|4way");
        cmd->add_option("--causality", causality,
                        "none|mulcat|mulcatbool|ablation-mulcat|ablation-mulcatbool");
        cmd->add_option("--method", method, "max|lehmer");
        cmd->add_option("--p", p_value, "lehmer parameter");
        cmd->add_option("--seed", seed, "run seed");
        cmd->add_option("--epochs", epochs, "training epochs");
        cmd->add_option("--train-tasks", train_tasks, "tasks per epoch");
        cmd->add_option("--val-tasks", val_tasks, "validation tasks");
        cmd->add_option("--test-tasks", test_tasks, "test tasks");
    };
    auto* train = app.add_subcommand("train", "train a model, then evaluate it");
    add_run_options(train);
    auto* eval = app.add_subcommand("eval", "evaluate an existing checkpoint");
    add_run_options(eval);
    auto* sweep = app.add_subcommand("sweep", "train the full causality grid plus ablations");
    add_run_options(sweep);
    auto* ablate = app.add_subcommand("ablate", "train only the ablation variants");
    add_run_options(ablate);

    auto* explain = app.add_subcommand("explain", "emit activation-map comparison panels");
    std::string ck_base, ck_mulcat, ck_mulcatbool;
    int max_cases = 8;
    add_run_options(explain);
    explain->add_option("--baseline-ckpt", ck_base, "plain-variant checkpoint")->required();
    explain->add_option("--mulcat-ckpt", ck_mulcat, "mulcat checkpoint")->required();
    explain->add_option("--mulcatbool-ckpt", ck_mulcatbool, "mulcatbool checkpoint")->required();
    explain->add_option("--cases", max_cases, "max panels to emit");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) return cmd_generate(gen);

        json overrides = json::object();
        if (!data_dir.empty()) overrides["data_dir"] = data_dir;
        if (!out_dir.empty()) overrides["out_dir"] = out_dir;
        if (!experiment.empty()) overrides["experiment"] = experiment;
        if (!causality.empty()) overrides["causality"] = causality;
        if (!method.empty()) overrides["method"] = method;
        if (p_value) overrides["p"] = *p_value;
        if (seed) overrides["seed"] = *seed;
        if (epochs) overrides["optimizer"]["epochs"] = *epochs;
        if (train_tasks) overrides["episodes"]["train_tasks_per_epoch"] = *train_tasks;
        if (val_tasks) overrides["episodes"]["val_tasks"] = *val_tasks;
        if (test_tasks) overrides["episodes"]["test_tasks"] = *test_tasks;
        const RunConfig cfg = load_config_with_overrides(config_path, overrides);

        if (train->parsed()) return run_train_eval(cfg, true);
        if (eval->parsed()) return run_train_eval(cfg, false);
        if (sweep->parsed()) return cmd_sweep(cfg, false);
        if (ablate->parsed()) return cmd_sweep(cfg, true);
        if (explain->parsed()) return cmd_explain(cfg, ck_base, ck_mulcat, ck_mulcatbool, max_cases);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
