#include "causalfew/config.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

using nlohmann::json;

namespace causalfew {

PipelineConfig RunConfig::pipeline() const {
    PipelineConfig p_cfg;
    p_cfg.variant = variant;
    p_cfg.method = method.value_or(CausalityMethod::Max);
    p_cfg.p = p.value_or(0.0);
    return p_cfg;
}

void validate(const RunConfig& cfg) {
    const bool causality_driven = cfg.variant == CausalityVariant::Mulcat ||
                                  cfg.variant == CausalityVariant::Mulcatbool;
    if (causality_driven) {
        if (!cfg.method) throw ConfigError("causality variants require a method (max|lehmer)");
        if (*cfg.method == CausalityMethod::Lehmer) {
            if (!cfg.p) throw ConfigError("lehmer method requires p");
            const bool in_sweep = std::any_of(kLehmerSweep.begin(), kLehmerSweep.end(),
                                              [&](double v) { return v == *cfg.p; });
            if (!in_sweep) {
                throw ConfigError("p must be one of {-100,-2,-1,0,1,100}, got " +
                                  std::to_string(*cfg.p));
            }
        } else if (cfg.p) {
            throw ConfigError("max method forbids p");
        }
    } else {
        if (cfg.method) throw ConfigError("method is only valid for mulcat/mulcatbool");
        if (cfg.p) throw ConfigError("p is only valid for the lehmer method");
    }
    if (cfg.queries < 1) throw ConfigError("queries must be >= 1");
    if (cfg.test_tasks < 1 || cfg.val_tasks < 0 || cfg.train_tasks_per_epoch < 0) {
        throw ConfigError("task counts must be non-negative (test >= 1)");
    }
    if (cfg.optim.epochs < 1) throw ConfigError("epochs must be >= 1");
    if (cfg.val_every < 1) throw ConfigError("val_every must be >= 1");
    try {
        cfg.encoder.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

RunConfig parse_run_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config JSON: ") + e.what());
    }
    RunConfig cfg;
    try {
        if (j.contains("experiment")) {
            const std::string e = j.at("experiment").get<std::string>();
            if (e == "2way") cfg.experiment = Experiment::TwoWay;
            else if (e == "4way") cfg.experiment = Experiment::FourWay;
            else throw ConfigError("experiment must be 2way or 4way");
        }
        if (j.contains("causality")) {
            cfg.variant = variant_from_string(j.at("causality").get<std::string>());
        }
        if (j.contains("method") && !j.at("method").is_null()) {
            const std::string m = j.at("method").get<std::string>();
            if (m == "max") cfg.method = CausalityMethod::Max;
            else if (m == "lehmer") cfg.method = CausalityMethod::Lehmer;
            else throw ConfigError("method must be max or lehmer");
        }
        if (j.contains("p") && !j.at("p").is_null()) cfg.p = j.at("p").get<double>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("encoder")) {
            const auto& ej = j.at("encoder");
            if (ej.contains("preset")) {
                const std::string preset = ej.at("preset").get<std::string>();
                if (preset == "desk") cfg.encoder = EncoderConfig::desk();
                else if (preset == "full") cfg.encoder = EncoderConfig::full_scale();
                else throw ConfigError("encoder preset must be desk or full");
            }
            if (ej.contains("k")) {
                cfg.encoder.k = ej.at("k").get<int>();
                cfg.encoder.channel_plan.back() = cfg.encoder.k;
            }
            if (ej.contains("input_size")) cfg.encoder.input_size = ej.at("input_size").get<int>();
            if (ej.contains("n")) cfg.encoder.n = ej.at("n").get<int>();
            if (ej.contains("channel_plan")) {
                cfg.encoder.channel_plan = ej.at("channel_plan").get<std::vector<int>>();
            }
        }
        if (j.contains("optimizer")) {
            const auto& oj = j.at("optimizer");
            if (oj.contains("lr")) cfg.optim.lr = oj.at("lr").get<double>();
            if (oj.contains("weight_decay")) cfg.optim.weight_decay = oj.at("weight_decay").get<double>();
            if (oj.contains("epochs")) cfg.optim.epochs = oj.at("epochs").get<int>();
            if (oj.contains("decay_epochs")) {
                cfg.optim.decay_epochs = oj.at("decay_epochs").get<std::vector<int>>();
            }
            if (oj.contains("decay_factor")) cfg.optim.decay_factor = oj.at("decay_factor").get<double>();
        }
        if (j.contains("episodes")) {
            const auto& ej = j.at("episodes");
            if (ej.contains("train_tasks_per_epoch")) {
                cfg.train_tasks_per_epoch = ej.at("train_tasks_per_epoch").get<int>();
            }
            if (ej.contains("val_tasks")) cfg.val_tasks = ej.at("val_tasks").get<int>();
            if (ej.contains("test_tasks")) cfg.test_tasks = ej.at("test_tasks").get<int>();
            if (ej.contains("queries")) cfg.queries = ej.at("queries").get<int>();
            if (ej.contains("val_every")) cfg.val_every = ej.at("val_every").get<int>();
        }
        if (j.contains("data_dir")) cfg.data_dir = j.at("data_dir").get<std::string>();
        if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config field: ") + e.what());
    }
    validate(cfg);
    return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
    json j{{"experiment", to_string(cfg.experiment)},
           {"causality", to_string(cfg.variant)},
           {"seed", cfg.seed},
           {"encoder",
            {{"input_size", cfg.encoder.input_size},
             {"channel_plan", cfg.encoder.channel_plan},
             {"k", cfg.encoder.k},
             {"n", cfg.encoder.n}}},
           {"optimizer",
            {{"lr", cfg.optim.lr},
             {"weight_decay", cfg.optim.weight_decay},
             {"epochs", cfg.optim.epochs},
             {"decay_epochs", cfg.optim.decay_epochs},
             {"decay_factor", cfg.optim.decay_factor}}},
           {"episodes",
            {{"train_tasks_per_epoch", cfg.train_tasks_per_epoch},
             {"val_tasks", cfg.val_tasks},
             {"test_tasks", cfg.test_tasks},
             {"queries", cfg.queries},
             {"val_every", cfg.val_every}}},
           {"data_dir", cfg.data_dir},
           {"out_dir", cfg.out_dir}};
    if (cfg.method) {
        j["method"] = *cfg.method == CausalityMethod::Max ? "max" : "lehmer";
    }
    if (cfg.p) j["p"] = *cfg.p;
    return j.dump(2);
}

}  // namespace causalfew
