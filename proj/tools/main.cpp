#include "marlene/experiment.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace marlene;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int cmd_run(const std::string& config_path, const std::string& algorithm,
            const std::string& arff, const std::string& synth_code, std::size_t synth_size,
            const std::vector<std::string>& sources, const std::string& learner,
            const std::vector<std::uint64_t>& seeds, std::size_t seed_count,
            std::uint64_t seed_base, double window_fraction, const std::string& out_dir,
            bool raw_sum, bool force, std::size_t max_members, bool show_config) {
    experiment_config cfg;
    if (!config_path.empty())
        cfg = experiment_config_from_json(nlohmann::json::parse(slurp(config_path)));

    if (!algorithm.empty()) cfg.algorithm = algorithm_from_string(algorithm);
    if (!arff.empty()) {
        cfg.arff_path = arff;
        cfg.synth.reset();
    }
    if (!synth_code.empty() || synth_size != 0 || !sources.empty()) {
        synth_config sc = cfg.synth.value_or(synth_config{});
        if (!synth_code.empty()) sc.drift_code = synth_code;
        if (synth_size != 0) sc.per_gaussian_size = synth_size;
        if (!sources.empty()) {
            sc.sources.clear();
            for (const std::string& s : sources)
                if (s != "none") sc.sources.push_back(source_kind_from_string(s));
        }
        cfg.synth = std::move(sc);
        cfg.arff_path.clear();
    }
    if (!learner.empty()) cfg.base.kind = learner_kind_from_string(learner);
    if (!seeds.empty()) cfg.seeds = seeds;
    if (seed_count != 0) {
        cfg.seeds.clear();
        for (std::size_t i = 0; i < seed_count; ++i) cfg.seeds.push_back(seed_base + i);
    }
    if (window_fraction > 0.0) cfg.window_fraction = window_fraction;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (raw_sum) cfg.raw_sum = true;
    if (force) cfg.allow_many_labels = true;
    if (max_members != 0) cfg.max_members_per_slot = max_members;

    if (show_config) {
        std::cout << experiment_config_to_json(cfg).dump(2) << "\n";
        return 0;
    }

    cfg.validate();
    run_artifacts artifacts = run_experiment(cfg);
    std::cout << "algorithm " << to_string(cfg.algorithm) << ", " << artifacts.per_seed.size()
              << " seed(s)\n";
    std::cout.precision(4);
    std::cout << std::fixed;
    std::cout << "mean macro_gmean=" << artifacts.mean.macro_gmean
              << " micro_gmean=" << artifacts.mean.micro_gmean
              << " ls_gmean=" << artifacts.mean.ls_gmean << " hscore=" << artifacts.mean.hscore
              << " hloss=" << artifacts.mean.hloss << "\n";
    std::cout << "stdev macro_gmean=" << artifacts.stdev.macro_gmean
              << " micro_gmean=" << artifacts.stdev.micro_gmean
              << " ls_gmean=" << artifacts.stdev.ls_gmean << " hscore=" << artifacts.stdev.hscore
              << " hloss=" << artifacts.stdev.hloss << "\n";
    std::cout << "mean runtime " << artifacts.mean_runtime_s << " s\n";
    for (const std::string& f : artifacts.files) std::cout << "wrote " << f << "\n";
    return 0;
}

int cmd_stats(const std::string& path, std::size_t labels) {
    dataset ds = path == "yeast-replica"      ? make_yeast_replica()
                 : path == "slashdot-replica" ? make_slashdot_replica()
                                              : load_dataset(path, labels);
    std::cout << format_stats_row(stats_report(ds)) << "\n";
    return 0;
}

int cmd_generate(const std::string& code, std::size_t size, std::uint64_t seed,
                 const std::vector<std::string>& sources, const std::string& replica,
                 const std::string& out_dir) {
    if (!replica.empty()) {
        dataset ds;
        if (replica == "yeast") ds = make_yeast_replica();
        else if (replica == "slashdot") ds = make_slashdot_replica();
        else throw std::invalid_argument("unknown replica '" + replica + "'");
        std::filesystem::create_directories(out_dir);
        std::string path = out_dir + "/" + ds.meta.name + ".arff";
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << write_arff(ds);
        std::cout << "wrote " << path << "\n";
        return 0;
    }
    synth_config cfg;
    cfg.drift_code = code;
    cfg.per_gaussian_size = size;
    cfg.seed = seed;
    for (const std::string& s : sources)
        if (s != "none") cfg.sources.push_back(source_kind_from_string(s));
    for (const std::string& f : write_synth_files(cfg, out_dir)) std::cout << "wrote " << f << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"streaming multi-label ensemble toolkit"};
    app.require_subcommand(1);

    std::string config_path, algorithm, arff, synth_code, out_dir, learner;
    std::size_t synth_size = 0, seed_count = 0, max_members = 0, labels = 0;
    std::uint64_t seed_base = 1, gen_seed = 1;
    double window_fraction = 0.0;
    std::vector<std::string> sources;
    std::vector<std::uint64_t> seeds;
    bool raw_sum = false, force = false, show_config = false;
    std::string stats_path, gen_code = "SS", replica;
    std::size_t gen_size = 500;

    CLI::App* run = app.add_subcommand("run", "run a prequential experiment");
    run->add_option("--config", config_path, "JSON config file; flags override its values");
    run->add_option("--algorithm", algorithm, "BR, BRPW, or DummyMajority");
    run->add_option("--arff", arff, "multi-label ARFF dataset path");
    run->add_option("--synth-code", synth_code, "drift code: SS IS II IA AA AS");
    run->add_option("--synth-size", synth_size, "per-gaussian size: 50 500 5000");
    run->add_option("--sources", sources, "source kinds: similar non_similar none")->delimiter(',');
    run->add_option("--learner", learner, "base learner: hoeffding_tree or naive_bayes");
    run->add_option("--seeds", seeds, "explicit seed list")->delimiter(',');
    run->add_option("--seed-count", seed_count, "run this many consecutive seeds");
    run->add_option("--seed-base", seed_base, "first seed for --seed-count");
    run->add_option("--window-fraction", window_fraction, "evaluation window fraction (0,1]");
    run->add_option("--out", out_dir, "output directory for CSV artifacts");
    run->add_flag("--raw-sum", raw_sum, "combine pairwise votes without normalization");
    run->add_flag("--force", force, "allow more than 32 labels despite quadratic growth");
    run->add_option("--max-members", max_members, "recycle members beyond this per-slot cap");
    run->add_flag("--show-config", show_config, "print the effective config and exit");

    CLI::App* stats = app.add_subcommand("stats", "print dataset size and imbalance statistics");
    stats->add_option("path", stats_path, "dataset path, or yeast-replica / slashdot-replica")
        ->required();
    stats->add_option("--labels", labels, "label count for csv datasets");

    CLI::App* gen = app.add_subcommand("generate", "write synthetic streams to disk");
    gen->add_option("--code", gen_code, "drift code: SS IS II IA AA AS");
    gen->add_option("--size", gen_size, "per-gaussian size: 50 500 5000");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--sources", sources, "source kinds: similar non_similar none")->delimiter(',');
    gen->add_option("--replica", replica, "write a benchmark stand-in instead: yeast, slashdot");
    gen->add_option("--out", out_dir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(config_path, algorithm, arff, synth_code, synth_size, sources, learner,
                           seeds, seed_count, seed_base, window_fraction, out_dir, raw_sum, force,
                           max_members, show_config);
        if (stats->parsed()) return cmd_stats(stats_path, labels);
        if (gen->parsed())
            return cmd_generate(gen_code, gen_size, gen_seed, sources, replica, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
