#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "causalfew/encoder.hpp"
#include "causalfew/episodes.hpp"
#include "causalfew/model.hpp"
#include "causalfew/training.hpp"

namespace causalfew {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// One experiment run. Defaults mirror the full-scale protocol (600 tasks per
// phase, 100 epochs); desk-scale runs override the counts.
struct RunConfig {
    Experiment experiment = Experiment::TwoWay;
    CausalityVariant variant = CausalityVariant::None;
    std::optional<CausalityMethod> method;  // only for mulcat/mulcatbool
    std::optional<double> p;                // only for method == lehmer
    std::uint64_t seed = 1;
    EncoderConfig encoder = EncoderConfig::desk();
    PesgConfig optim;
    int train_tasks_per_epoch = 600;
    int val_tasks = 600;
    int test_tasks = 600;
    int queries = 10;
    int val_every = 1;  // epochs between validation passes
    std::string data_dir;
    std::string out_dir;

    PipelineConfig pipeline() const;
};

// Throws ConfigError on any invariant violation: lehmer requires p from the
// sweep set; max forbids p; ablation variants and the baseline forbid
// method/p entirely.
void validate(const RunConfig& cfg);

// JSON round trip. parse_run_config applies `text` over defaults and
// validates.
RunConfig parse_run_config(const std::string& text);
std::string run_config_to_json(const RunConfig& cfg);

}  // namespace causalfew
