#pragma once

#include "marlene/br_marlene.hpp"
#include "marlene/brpw_marlene.hpp"
#include "marlene/metrics.hpp"
#include "marlene/synth.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace marlene {

enum class algorithm_kind : std::uint8_t { br, brpw, dummy_majority };

algorithm_kind algorithm_from_string(const std::string& s);
std::string to_string(algorithm_kind k);

struct experiment_config {
    std::string arff_path;              // exactly one of arff_path / synth
    std::optional<synth_config> synth;  // per-run seed overrides synth.seed
    algorithm_kind algorithm = algorithm_kind::br;
    learner_config base;
    drift_config drift;
    double window_fraction = 0.1;
    std::vector<std::uint64_t> seeds = {1};
    std::string out_dir; // empty runs in memory only
    bool raw_sum = false;
    bool allow_many_labels = false;
    std::size_t max_members_per_slot = 0;
    std::size_t aswr_every = 50;

    void validate() const;
};

nlohmann::json experiment_config_to_json(const experiment_config& cfg);
experiment_config experiment_config_from_json(const nlohmann::json& j);

struct drift_event_record {
    std::uint64_t target_step = 0; // target examples seen when it fired
    int stream = 0;                // stream of the triggering event
    std::string scope;             // "label" or "pair"
    std::size_t index = 0;         // label index or canonical pair index
    std::string what;              // "warning", "drift", "spawn"
};

struct seed_result {
    std::uint64_t seed = 0;
    metric_snapshot final_snapshot;
    double runtime_s = 0, parse_s = 0, predict_s = 0, train_s = 0, evaluate_s = 0;
    double final_aswr = 0.5, final_aswr_pw = 0.5;
    std::size_t n_members = 0, n_pw_members = 0;
    std::size_t window_len = 0, n_target = 0;
    std::vector<double> macro_trace; // windowed macro gmean per target step
    // cumulative per-label gmean, reset at ground-truth drift starts;
    // label_gmean_trace[q][t] mirrors column q of curves.csv
    std::vector<std::vector<double>> label_gmean_trace;
    std::vector<std::pair<std::uint64_t, double>> aswr_trace;
    std::vector<std::pair<std::uint64_t, double>> aswr_pw_trace;
    std::vector<drift_event_record> drift_events;
};

struct run_artifacts {
    std::vector<seed_result> per_seed;
    metric_snapshot mean, stdev;
    double mean_runtime_s = 0;
    std::vector<std::string> files;
};

// prequential protocol: every target event is predicted and scored before it
// trains the model; source events only train
run_artifacts run_experiment(const experiment_config& cfg);

// .arff loads by extension; .csv needs the label count
dataset load_dataset(const std::string& path, std::size_t csv_labels = 0);

struct dataset_report {
    std::string name;
    std::size_t n_instances = 0, n_features = 0, n_labels = 0;
    imbalance_stats stats;
};

dataset_report stats_report(const dataset& ds);
std::string format_stats_row(const dataset_report& rep);

// writes target/source CSVs, the drift manifest, and a config echo;
// returns the created paths
std::vector<std::string> write_synth_files(const synth_config& cfg, const std::string& out_dir);

} // namespace marlene
