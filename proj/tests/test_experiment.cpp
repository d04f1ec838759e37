#include "doctest.h"

#include "marlene/experiment.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace marlene;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("marlene_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spill(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

experiment_config small_synth_config(algorithm_kind alg) {
    experiment_config cfg;
    cfg.synth = synth_config{};
    cfg.synth->per_gaussian_size = 50;
    cfg.synth->sources = {source_kind::similar};
    cfg.algorithm = alg;
    cfg.base.kind = learner_kind::naive_bayes;
    cfg.seeds = {7};
    return cfg;
}

// a constant-label single-feature set; the first prediction comes from an
// ensemble that has seen nothing, so it must miss
dataset all_positive_dataset(std::size_t n) {
    dataset ds;
    ds.meta.name = "allpos";
    ds.meta.n_features = 1;
    ds.meta.n_labels = 1;
    ds.meta.feature_kinds = {feature_kind::numeric};
    for (std::size_t i = 0; i < n; ++i)
        ds.items.push_back({{static_cast<double>(i % 3)}, {1}, stream_id::target(), i});
    return ds;
}

dataset wide_label_dataset(std::size_t n_labels, std::size_t n_rows) {
    dataset ds;
    ds.meta.name = "wide";
    ds.meta.n_features = 3;
    ds.meta.n_labels = n_labels;
    ds.meta.feature_kinds.assign(3, feature_kind::numeric);
    for (std::size_t i = 0; i < n_rows; ++i) {
        instance ev;
        ev.x = {double(i % 2), double(i % 5), 1.0};
        ev.y.assign(n_labels, 0);
        ev.y[i % n_labels] = 1;
        ev.stream = stream_id::target();
        ev.t = i;
        ds.items.push_back(std::move(ev));
    }
    return ds;
}

int run_cli(const std::string& args, std::string* out = nullptr, std::string* err = nullptr) {
    static int counter = 0;
    fs::path dir = fs::temp_directory_path() / "marlene_cli_io";
    fs::create_directories(dir);
    fs::path out_p = dir / ("out" + std::to_string(counter) + ".txt");
    fs::path err_p = dir / ("err" + std::to_string(counter) + ".txt");
    ++counter;
    std::string cmd = std::string(MARLENE_CLI_PATH) + " " + args + " >" + out_p.string() +
                      " 2>" + err_p.string();
    int rc = std::system(cmd.c_str());
    if (out) *out = slurp(out_p);
    if (err) *err = slurp(err_p);
    return rc == -1 ? -1 : WEXITSTATUS(rc);
}

} // namespace

TEST_CASE("algorithm names round-trip and junk is rejected") {
    for (auto k : {algorithm_kind::br, algorithm_kind::brpw, algorithm_kind::dummy_majority})
        CHECK(algorithm_from_string(to_string(k)) == k);
    CHECK(algorithm_from_string("BR") == algorithm_kind::br);
    CHECK(algorithm_from_string("BRPW") == algorithm_kind::brpw);
    CHECK_THROWS_AS(algorithm_from_string("boosting"), std::invalid_argument);
}

TEST_CASE("config validation catches contradictory shapes") {
    experiment_config cfg;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument); // no data source

    cfg = small_synth_config(algorithm_kind::br);
    CHECK_NOTHROW(cfg.validate());

    experiment_config both = cfg;
    both.arff_path = "x.arff";
    CHECK_THROWS_AS(both.validate(), std::invalid_argument);

    experiment_config bad_window = cfg;
    bad_window.window_fraction = 0.0;
    CHECK_THROWS_AS(bad_window.validate(), std::invalid_argument);
    bad_window.window_fraction = 1.5;
    CHECK_THROWS_AS(bad_window.validate(), std::invalid_argument);

    experiment_config no_seeds = cfg;
    no_seeds.seeds.clear();
    CHECK_THROWS_AS(no_seeds.validate(), std::invalid_argument);

    experiment_config bad_synth = cfg;
    bad_synth.synth->per_gaussian_size = 100;
    CHECK_THROWS_AS(bad_synth.validate(), std::invalid_argument);
}

TEST_CASE("config json round-trip preserves every field") {
    experiment_config cfg = small_synth_config(algorithm_kind::brpw);
    cfg.synth->drift_code = "IA";
    cfg.synth->sources = {source_kind::similar, source_kind::non_similar};
    cfg.base.kind = learner_kind::hoeffding_tree;
    cfg.drift.lambda_decay = 0.95;
    cfg.window_fraction = 0.25;
    cfg.seeds = {3, 9, 27};
    cfg.out_dir = "/tmp/somewhere";
    cfg.raw_sum = true;
    cfg.allow_many_labels = true;
    cfg.max_members_per_slot = 4;
    cfg.aswr_every = 17;

    json j = experiment_config_to_json(cfg);
    experiment_config back = experiment_config_from_json(j);
    CHECK(experiment_config_to_json(back) == j);

    experiment_config arff_cfg;
    arff_cfg.arff_path = "data.arff";
    arff_cfg.algorithm = algorithm_kind::dummy_majority;
    json j2 = experiment_config_to_json(arff_cfg);
    CHECK(experiment_config_to_json(experiment_config_from_json(j2)) == j2);
}

TEST_CASE("dummy run replays the published protocol exactly") {
    experiment_config cfg = small_synth_config(algorithm_kind::dummy_majority);
    run_artifacts art = run_experiment(cfg);
    REQUIRE(art.per_seed.size() == 1);
    const seed_result& res = art.per_seed[0];
    CHECK(res.n_target == 250);
    CHECK(res.window_len == 25);
    CHECK(res.n_members == 0);
    CHECK(res.aswr_trace.empty());
    REQUIRE(res.macro_trace.size() == 250);

    // literal test-then-train replay: predict from counts over examples seen
    // so far, score, then count the new example
    synth_config sc = *cfg.synth;
    sc.seed = 7;
    synth_streams streams = synth_generate(sc);
    const std::size_t n_labels = streams.target.meta.n_labels;
    window_evaluator ref(25, n_labels);
    std::vector<std::uint64_t> pos(n_labels, 0), neg(n_labels, 0);
    metric_snapshot snap;
    for (std::size_t i = 0; i < streams.target.items.size(); ++i) {
        const instance& ev = streams.target.items[i];
        std::vector<std::uint8_t> y_hat(n_labels, 0);
        for (std::size_t q = 0; q < n_labels; ++q) y_hat[q] = pos[q] > neg[q] ? 1 : 0;
        snap = ref.step(y_hat, ev.y);
        CHECK(res.macro_trace[i] == snap.macro_gmean);
        for (std::size_t q = 0; q < n_labels; ++q) (ev.y[q] ? pos[q] : neg[q]) += 1;
    }
    CHECK(res.final_snapshot.macro_gmean == snap.macro_gmean);
    CHECK(res.final_snapshot.micro_gmean == snap.micro_gmean);
    CHECK(res.final_snapshot.ls_gmean == snap.ls_gmean);
    CHECK(res.final_snapshot.hscore == snap.hscore);
    CHECK(res.final_snapshot.hloss == snap.hloss);
}

TEST_CASE("the ensembles are scored before they train on an example") {
    fs::path dir = fresh_dir("order");
    fs::path arff = dir / "allpos.arff";
    spill(arff, write_arff(all_positive_dataset(10)));

    for (auto alg : {algorithm_kind::br, algorithm_kind::brpw}) {
        CAPTURE(to_string(alg));
        experiment_config cfg;
        cfg.arff_path = arff.string();
        cfg.algorithm = alg;
        cfg.base.kind = learner_kind::naive_bayes;
        run_artifacts art = run_experiment(cfg);
        // all-positive label: a prediction made before any training is 0, so
        // the first window must score a zero G-Mean
        CHECK(art.per_seed[0].macro_trace[0] == 0.0);
    }
}

TEST_CASE("identical config and seed write identical artifact bytes") {
    fs::path dir_a = fresh_dir("repro_a");
    fs::path dir_b = fresh_dir("repro_b");

    experiment_config cfg = small_synth_config(algorithm_kind::br);
    cfg.out_dir = dir_a.string();
    run_artifacts a = run_experiment(cfg);
    cfg.out_dir = dir_b.string();
    run_artifacts b = run_experiment(cfg);

    for (const char* name : {"metrics_seed7.csv", "curves_seed7.csv", "aswr_seed7.csv",
                             "drift_seed7.csv"}) {
        CAPTURE(name);
        CHECK(slurp(dir_a / name) == slurp(dir_b / name));
    }
    json ca = json::parse(slurp(dir_a / "config.json"));
    json cb = json::parse(slurp(dir_b / "config.json"));
    ca.erase("out_dir");
    cb.erase("out_dir");
    CHECK(ca == cb);

    // the run reports every file it created
    for (const std::string& f : a.files) CHECK(fs::exists(f));
    CHECK(a.files.size() == b.files.size());

    // a different seed must actually change the metrics
    fs::path dir_c = fresh_dir("repro_c");
    cfg.out_dir = dir_c.string();
    cfg.seeds = {8};
    run_experiment(cfg);
    CHECK(slurp(dir_a / "metrics_seed7.csv") != slurp(dir_c / "metrics_seed8.csv"));
}

TEST_CASE("in-memory run equals the file-backed run") {
    experiment_config cfg = small_synth_config(algorithm_kind::br);
    run_artifacts memory = run_experiment(cfg);

    fs::path dir = fresh_dir("filebacked");
    cfg.out_dir = dir.string();
    run_artifacts file = run_experiment(cfg);

    CHECK(memory.per_seed[0].macro_trace == file.per_seed[0].macro_trace);
    CHECK(memory.per_seed[0].final_snapshot.macro_gmean ==
          file.per_seed[0].final_snapshot.macro_gmean);
    CHECK(memory.per_seed[0].final_aswr == file.per_seed[0].final_aswr);
    CHECK(memory.files.empty());
}

TEST_CASE("window length is the ceiling of the fraction") {
    experiment_config cfg = small_synth_config(algorithm_kind::dummy_majority);
    CHECK(run_experiment(cfg).per_seed[0].window_len == 25);

    cfg.window_fraction = 0.5;
    CHECK(run_experiment(cfg).per_seed[0].window_len == 125);

    fs::path dir = fresh_dir("window");
    fs::path arff = dir / "seven.arff";
    spill(arff, write_arff(all_positive_dataset(7)));
    experiment_config tiny;
    tiny.arff_path = arff.string();
    tiny.algorithm = algorithm_kind::dummy_majority;
    CHECK(run_experiment(tiny).per_seed[0].window_len == 1);
}

TEST_CASE("dataset loading rejects what it cannot read") {
    CHECK_THROWS(load_dataset("/nonexistent/nowhere.arff"));
    fs::path dir = fresh_dir("loader");
    spill(dir / "d.csv", "f1,l1\n0.5,1\n");
    CHECK_THROWS_AS(load_dataset((dir / "d.csv").string()), std::invalid_argument);
    CHECK(load_dataset((dir / "d.csv").string(), 1).items.size() == 1);
    spill(dir / "d.tsv", "x\n");
    CHECK_THROWS_AS(load_dataset((dir / "d.tsv").string()), std::invalid_argument);
}

TEST_CASE("stats rows match the pinned corpus numbers") {
    CHECK(format_stats_row(stats_report(make_yeast_replica())) ==
          "yeast_replica: |D|=2417 |x|=103 |L|=14 LDen=0.303 LIR=0.232 LSIR=0.297");
    CHECK(format_stats_row(stats_report(make_slashdot_replica())) ==
          "slashdot_replica: |D|=3782 |x|=1079 |L|=22 LDen=0.054 LIR=0.054 LSIR=0.054");
}

TEST_CASE("synth file writer is deterministic and complete") {
    synth_config sc;
    sc.per_gaussian_size = 50;
    sc.sources = {source_kind::similar, source_kind::non_similar};
    sc.seed = 3;

    fs::path dir_a = fresh_dir("synthfiles_a");
    std::vector<std::string> files = write_synth_files(sc, dir_a.string());
    std::vector<std::string> names;
    for (const std::string& f : files) names.push_back(fs::path(f).filename().string());
    std::vector<std::string> expected = {"target.csv", "source1_similar.csv",
                                         "source2_non_similar.csv", "drift_manifest.csv",
                                         "synth_config.json"};
    CHECK(names == expected);
    for (const std::string& f : files) CHECK(fs::exists(f));

    fs::path dir_b = fresh_dir("synthfiles_b");
    write_synth_files(sc, dir_b.string());
    for (const std::string& n : expected) CHECK(slurp(dir_a / n) == slurp(dir_b / n));

    CHECK(slurp(dir_a / "drift_manifest.csv") == "label,kind,start,end\n");
    sc.drift_code = "AA";
    fs::path dir_c = fresh_dir("synthfiles_c");
    write_synth_files(sc, dir_c.string());
    CHECK(slurp(dir_c / "drift_manifest.csv") ==
          "label,kind,start,end\n1,abrupt,125,125\n2,abrupt,125,125\n");
}

TEST_CASE("a failed run removes its partial outputs") {
    fs::path dir = fresh_dir("cleanup");
    fs::path arff = dir / "wide.arff";
    spill(arff, write_arff(wide_label_dataset(33, 8)));

    experiment_config cfg;
    cfg.arff_path = arff.string();
    cfg.algorithm = algorithm_kind::brpw;
    cfg.base.kind = learner_kind::naive_bayes;
    cfg.out_dir = (dir / "out").string();
    CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
    std::size_t leftovers = 0;
    if (fs::exists(dir / "out"))
        for (const auto& e : fs::directory_iterator(dir / "out")) {
            (void)e;
            ++leftovers;
        }
    CHECK(leftovers == 0);

    cfg.allow_many_labels = true;
    run_artifacts art = run_experiment(cfg);
    CHECK(art.per_seed[0].n_pw_members == 33 * 32);
}

TEST_CASE("drift log captures the midpoint concept change") {
    experiment_config cfg;
    cfg.synth = synth_config{};
    cfg.synth->per_gaussian_size = 500;
    cfg.synth->drift_code = "AA";
    cfg.algorithm = algorithm_kind::br;
    cfg.base.kind = learner_kind::naive_bayes;
    cfg.seeds = {1};
    fs::path dir = fresh_dir("driftlog");
    cfg.out_dir = dir.string();

    run_artifacts art = run_experiment(cfg);
    const seed_result& res = art.per_seed[0];

    // the first observe registers one member per label; only later spawns are
    // drift responses
    bool spawn_1 = false, spawn_2 = false, early_spawn = false, stable_label_spawn = false;
    for (const drift_event_record& rec : res.drift_events) {
        if (rec.scope != "label" || rec.what != "spawn" || rec.target_step == 1) continue;
        if (rec.target_step <= 1250) {
            early_spawn = true;
        } else if (rec.index == 1) {
            spawn_1 = true;
            CHECK(rec.target_step <= 1750);
        } else if (rec.index == 2) {
            spawn_2 = true;
            CHECK(rec.target_step <= 1750);
        } else {
            stable_label_spawn = true;
        }
    }
    CHECK(spawn_1);
    CHECK(spawn_2);
    CHECK_FALSE(early_spawn);
    CHECK_FALSE(stable_label_spawn);

    // the csv mirrors the in-memory log
    std::string csv = slurp(dir / "drift_seed1.csv");
    std::ostringstream ref;
    ref << "target_step,stream,scope,index,event\n";
    for (const drift_event_record& rec : res.drift_events)
        ref << rec.target_step << ',' << rec.stream << ',' << rec.scope << ',' << rec.index
            << ',' << rec.what << "\n";
    CHECK(csv == ref.str());
}

TEST_CASE("command line drives the whole pipeline") {
    fs::path dir = fresh_dir("cli");
    std::string out, err;

    SUBCASE("show-config prints the effective configuration") {
        int rc = run_cli("run --show-config --algorithm BRPW --synth-code SS --synth-size 50",
                         &out, &err);
        CHECK(rc == 0);
        json j = json::parse(out);
        CHECK(j.at("algorithm") == "BRPW");
        CHECK(j.at("synth").at("per_gaussian_size") == 50);
    }

    SUBCASE("stats prints the pinned replica rows") {
        int rc = run_cli("stats yeast-replica", &out, &err);
        CHECK(rc == 0);
        CHECK(out ==
              "yeast_replica: |D|=2417 |x|=103 |L|=14 LDen=0.303 LIR=0.232 LSIR=0.297\n");
    }

    SUBCASE("generate writes an arff that stats can read back") {
        int rc = run_cli("generate --replica slashdot --out " + (dir / "gen").string(), &out,
                         &err);
        CHECK(rc == 0);
        fs::path arff = dir / "gen" / "slashdot_replica.arff";
        CHECK(out.find(arff.string()) != std::string::npos);
        REQUIRE(fs::exists(arff));
        rc = run_cli("stats " + arff.string(), &out, &err);
        CHECK(rc == 0);
        CHECK(out.find("LDen=0.054 LIR=0.054 LSIR=0.054") != std::string::npos);
    }

    SUBCASE("a small run produces the summary files") {
        fs::path run_dir = dir / "run";
        int rc = run_cli("run --synth-code SS --synth-size 50 --sources similar"
                         " --learner naive_bayes --seeds 5 --out " + run_dir.string(),
                         &out, &err);
        CHECK(rc == 0);
        CHECK(out.find("mean") != std::string::npos);
        CHECK(fs::exists(run_dir / "summary.csv"));
        CHECK(fs::exists(run_dir / "metrics_seed5.csv"));
        CHECK(fs::exists(run_dir / "timing.csv"));
    }

    SUBCASE("the pairwise label guard stops wide datasets unless forced") {
        fs::path arff = dir / "wide.arff";
        spill(arff, write_arff(wide_label_dataset(33, 8)));
        int rc = run_cli("run --arff " + arff.string() +
                         " --algorithm BRPW --learner naive_bayes --seeds 1", &out, &err);
        CHECK(rc != 0);
        CHECK(err.find("labels") != std::string::npos);
        rc = run_cli("run --arff " + arff.string() +
                     " --algorithm BRPW --learner naive_bayes --seeds 1 --force", &out, &err);
        CHECK(rc == 0);
    }

    SUBCASE("failures come back as exit codes and stderr") {
        int rc = run_cli("stats /nonexistent/nowhere.arff", &out, &err);
        CHECK(rc != 0);
        CHECK(err.rfind("error:", 0) == 0);
        rc = run_cli("explode", &out, &err);
        CHECK(rc != 0);
    }
}
