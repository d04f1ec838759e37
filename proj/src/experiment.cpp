#include "marlene/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace marlene {

namespace {

namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point start) {
    return std::chrono::duration<double>(clock_type::now() - start).count();
}

// per-label running-majority baseline; ignores source events by design
struct dummy_majority {
    std::vector<std::uint64_t> pos, neg;

    explicit dummy_majority(std::size_t n_labels) : pos(n_labels, 0), neg(n_labels, 0) {}

    std::vector<std::uint8_t> predict() const {
        std::vector<std::uint8_t> y(pos.size());
        for (std::size_t q = 0; q < pos.size(); ++q) y[q] = pos[q] > neg[q] ? 1 : 0;
        return y;
    }

    void observe(const std::vector<std::uint8_t>& y) {
        for (std::size_t q = 0; q < y.size(); ++q) {
            if (y[q]) ++pos[q];
            else ++neg[q];
        }
    }
};

struct output_sink {
    std::string dir;
    std::vector<std::string>* created;

    std::ofstream open(const std::string& name) {
        fs::path p = fs::path(dir) / name;
        std::ofstream out(p);
        if (!out) throw std::runtime_error("cannot write " + p.string());
        created->push_back(p.string());
        return out;
    }

    bool active() const { return !dir.empty(); }
};

std::string csv_double(double v) {
    std::ostringstream out;
    out.precision(9);
    out << v;
    return out.str();
}

void log_report(const observe_report& rep, const char* scope, std::uint64_t target_step,
                int stream, std::vector<drift_event_record>& events,
                const std::vector<std::size_t>* spawn_labels) {
    for (const auto& [index, signal] : rep.signals) {
        drift_event_record rec;
        rec.target_step = target_step;
        rec.stream = stream;
        rec.scope = scope;
        rec.index = index;
        rec.what = to_string(signal);
        events.push_back(std::move(rec));
    }
    for (std::size_t i = 0; i < rep.spawned.size(); ++i) {
        drift_event_record rec;
        rec.target_step = target_step;
        rec.stream = stream;
        rec.scope = scope;
        rec.index = spawn_labels ? (*spawn_labels)[i] : rep.spawned[i];
        rec.what = "spawn";
        events.push_back(std::move(rec));
    }
}

metric_snapshot elementwise(const std::vector<seed_result>& seeds, bool stdev) {
    auto stat = [&](auto pick) {
        double m = 0.0;
        for (const auto& r : seeds) m += pick(r);
        m /= static_cast<double>(seeds.size());
        if (!stdev) return m;
        if (seeds.size() < 2) return 0.0;
        double s = 0.0;
        for (const auto& r : seeds) s += (pick(r) - m) * (pick(r) - m);
        return std::sqrt(s / static_cast<double>(seeds.size() - 1));
    };
    metric_snapshot out;
    out.macro_gmean = stat([](const seed_result& r) { return r.final_snapshot.macro_gmean; });
    out.micro_gmean = stat([](const seed_result& r) { return r.final_snapshot.micro_gmean; });
    out.ls_gmean = stat([](const seed_result& r) { return r.final_snapshot.ls_gmean; });
    out.hscore = stat([](const seed_result& r) { return r.final_snapshot.hscore; });
    out.hloss = stat([](const seed_result& r) { return r.final_snapshot.hloss; });
    return out;
}

} // namespace

algorithm_kind algorithm_from_string(const std::string& s) {
    if (s == "BR" || s == "br") return algorithm_kind::br;
    if (s == "BRPW" || s == "brpw") return algorithm_kind::brpw;
    if (s == "DummyMajority" || s == "dummy" || s == "dummy_majority")
        return algorithm_kind::dummy_majority;
    throw std::invalid_argument("unknown algorithm '" + s + "'");
}

std::string to_string(algorithm_kind k) {
    switch (k) {
        case algorithm_kind::br: return "BR";
        case algorithm_kind::brpw: return "BRPW";
        case algorithm_kind::dummy_majority: return "DummyMajority";
    }
    throw std::logic_error("bad algorithm kind");
}

void experiment_config::validate() const {
    if (arff_path.empty() == !synth.has_value())
        throw std::invalid_argument("configure exactly one data source: arff_path or synth");
    if (synth) synth->validate();
    if (!(window_fraction > 0.0) || window_fraction > 1.0)
        throw std::invalid_argument("window fraction must be in (0,1]");
    if (seeds.empty()) throw std::invalid_argument("at least one seed is required");
    if (aswr_every < 1) throw std::invalid_argument("aswr sampling period must be at least 1");
}

nlohmann::json experiment_config_to_json(const experiment_config& cfg) {
    nlohmann::json j;
    j["algorithm"] = to_string(cfg.algorithm);
    j["arff_path"] = cfg.arff_path;
    if (cfg.synth) {
        nlohmann::json s;
        s["per_gaussian_size"] = cfg.synth->per_gaussian_size;
        s["drift_code"] = cfg.synth->drift_code;
        s["seed"] = cfg.synth->seed;
        s["sources"] = nlohmann::json::array();
        for (source_kind k : cfg.synth->sources) s["sources"].push_back(to_string(k));
        j["synth"] = std::move(s);
    }
    j["base"] = learner_config_to_json(cfg.base);
    j["drift"] = drift_config_to_json(cfg.drift);
    j["window_fraction"] = cfg.window_fraction;
    j["seeds"] = cfg.seeds;
    j["out_dir"] = cfg.out_dir;
    j["raw_sum"] = cfg.raw_sum;
    j["allow_many_labels"] = cfg.allow_many_labels;
    j["max_members_per_slot"] = cfg.max_members_per_slot;
    j["aswr_every"] = cfg.aswr_every;
    return j;
}

experiment_config experiment_config_from_json(const nlohmann::json& j) {
    experiment_config cfg;
    if (j.contains("algorithm")) cfg.algorithm = algorithm_from_string(j.at("algorithm"));
    if (j.contains("arff_path")) cfg.arff_path = j.at("arff_path");
    if (j.contains("synth")) {
        const auto& s = j.at("synth");
        synth_config sc;
        if (s.contains("per_gaussian_size")) sc.per_gaussian_size = s.at("per_gaussian_size");
        if (s.contains("drift_code")) sc.drift_code = s.at("drift_code");
        if (s.contains("seed")) sc.seed = s.at("seed");
        if (s.contains("sources"))
            for (const auto& v : s.at("sources"))
                sc.sources.push_back(source_kind_from_string(v.get<std::string>()));
        cfg.synth = std::move(sc);
    }
    if (j.contains("base")) cfg.base = learner_config_from_json(j.at("base"));
    if (j.contains("drift")) cfg.drift = drift_config_from_json(j.at("drift"));
    if (j.contains("window_fraction")) cfg.window_fraction = j.at("window_fraction");
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir");
    if (j.contains("raw_sum")) cfg.raw_sum = j.at("raw_sum");
    if (j.contains("allow_many_labels")) cfg.allow_many_labels = j.at("allow_many_labels");
    if (j.contains("max_members_per_slot")) cfg.max_members_per_slot = j.at("max_members_per_slot");
    if (j.contains("aswr_every")) cfg.aswr_every = j.at("aswr_every");
    return cfg;
}

dataset load_dataset(const std::string& path, std::size_t csv_labels) {
    fs::path p(path);
    if (!fs::exists(p)) throw std::runtime_error("dataset file not found: " + path);
    if (p.extension() == ".arff") return read_arff_file(path);
    if (p.extension() == ".csv") {
        if (csv_labels == 0)
            throw std::invalid_argument("csv datasets need an explicit label count");
        return read_csv_file(path, csv_labels);
    }
    throw std::invalid_argument("unsupported dataset extension: " + p.extension().string());
}

dataset_report stats_report(const dataset& ds) {
    dataset_report rep;
    rep.name = ds.meta.name;
    rep.n_instances = ds.items.size();
    rep.n_features = ds.meta.n_features;
    rep.n_labels = ds.meta.n_labels;
    rep.stats = dataset_stats(ds.items);
    return rep;
}

std::string format_stats_row(const dataset_report& rep) {
    std::ostringstream out;
    out.precision(3);
    out << std::fixed;
    out << rep.name << ": |D|=" << rep.n_instances << " |x|=" << rep.n_features
        << " |L|=" << rep.n_labels << " LDen=" << rep.stats.lden << " LIR=" << rep.stats.lir
        << " LSIR=" << rep.stats.lsir;
    return out.str();
}

std::vector<std::string> write_synth_files(const synth_config& cfg, const std::string& out_dir) {
    cfg.validate();
    fs::create_directories(out_dir);
    synth_streams streams = synth_generate(cfg);
    std::vector<std::string> created;
    output_sink sink{out_dir, &created};
    sink.open("target.csv") << write_csv(streams.target);
    for (std::size_t k = 0; k < streams.sources.size(); ++k)
        sink.open("source" + std::to_string(k + 1) + "_" + to_string(cfg.sources[k]) + ".csv")
            << write_csv(streams.sources[k]);
    sink.open("drift_manifest.csv") << drift_manifest(streams.ground_truth);
    nlohmann::json echo;
    echo["per_gaussian_size"] = cfg.per_gaussian_size;
    echo["drift_code"] = cfg.drift_code;
    echo["seed"] = cfg.seed;
    echo["sources"] = nlohmann::json::array();
    for (source_kind k : cfg.sources) echo["sources"].push_back(to_string(k));
    sink.open("synth_config.json") << echo.dump(2) << "\n";
    return created;
}

namespace {

struct prepared_run {
    std::vector<instance> schedule;
    std::size_t n_target = 0;
    std::size_t n_labels = 0;
    std::vector<drift_spec> ground_truth;
};

prepared_run prepare(const experiment_config& cfg, const dataset* arff, std::uint64_t seed) {
    prepared_run run;
    if (arff) {
        run.n_labels = arff->meta.n_labels;
        run.n_target = arff->items.size();
        run.schedule = arff->items;
        for (std::uint64_t i = 0; i < run.schedule.size(); ++i) {
            run.schedule[i].stream = stream_id::target();
            run.schedule[i].t = i;
        }
        return run;
    }
    synth_config sc = *cfg.synth;
    sc.seed = seed;
    synth_streams streams = synth_generate(sc);
    run.n_labels = streams.target.meta.n_labels;
    run.n_target = streams.target.items.size();
    run.ground_truth = streams.ground_truth;
    std::vector<std::vector<instance>> sources;
    sources.reserve(streams.sources.size());
    for (auto& s : streams.sources) sources.push_back(std::move(s.items));
    // sources are paced to finish alongside the target so transfer is
    // available from the start of the run
    run.schedule = interleave(std::move(streams.target.items), std::move(sources),
                              interleave_policy::proportional);
    return run;
}

} // namespace

run_artifacts run_experiment(const experiment_config& cfg) {
    cfg.validate();

    run_artifacts artifacts;
    dataset arff_data;
    const dataset* arff = nullptr;
    if (!cfg.arff_path.empty()) {
        arff_data = load_dataset(cfg.arff_path);
        arff = &arff_data;
    }

    if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);
    output_sink sink{cfg.out_dir, &artifacts.files};

    try {
        if (sink.active()) {
            experiment_config echo = cfg;
            sink.open("config.json") << experiment_config_to_json(echo).dump(2) << "\n";
        }

        for (std::uint64_t seed : cfg.seeds) {
            auto run_start = clock_type::now();
            seed_result res;
            res.seed = seed;

            auto parse_start = clock_type::now();
            prepared_run run = prepare(cfg, arff, seed);
            res.parse_s = seconds_since(parse_start);
            res.n_target = run.n_target;
            res.window_len = static_cast<std::size_t>(
                std::ceil(cfg.window_fraction * static_cast<double>(run.n_target)));
            if (res.window_len < 1) res.window_len = 1;

            br_config bc;
            bc.base = cfg.base;
            bc.drift = cfg.drift;
            bc.seed = seed;
            bc.max_members_per_slot = cfg.max_members_per_slot;
            brpw_config pc;
            pc.br = bc;
            pc.raw_sum = cfg.raw_sum;
            pc.allow_many_labels = cfg.allow_many_labels;

            std::optional<br_ensemble> br;
            std::optional<brpw_ensemble> brpw;
            std::optional<dummy_majority> dummy;
            switch (cfg.algorithm) {
                case algorithm_kind::br: br.emplace(bc); break;
                case algorithm_kind::brpw: brpw.emplace(pc); break;
                case algorithm_kind::dummy_majority: dummy.emplace(run.n_labels); break;
            }

            window_evaluator evaluator(res.window_len, run.n_labels);
            label_gmean_tracker tracker(run.n_labels);
            res.label_gmean_trace.assign(run.n_labels, {});

            std::ofstream metrics_csv, curves_csv, aswr_csv, drift_csv;
            if (sink.active()) {
                std::string tag = "_seed" + std::to_string(seed) + ".csv";
                metrics_csv = sink.open("metrics" + tag);
                metrics_csv << snapshot_csv_header() << "\n";
                curves_csv = sink.open("curves" + tag);
                curves_csv << "step";
                for (std::size_t q = 0; q < run.n_labels; ++q) curves_csv << ",gmean_l" << q;
                curves_csv << "\n";
                if (!dummy) {
                    aswr_csv = sink.open("aswr" + tag);
                    aswr_csv << (brpw ? "step,aswr_br,aswr_pw" : "step,aswr") << "\n";
                    drift_csv = sink.open("drift" + tag);
                    drift_csv << "target_step,stream,scope,index,event\n";
                }
            }

            std::uint64_t target_step = 0;
            std::size_t drift_logged = 0;
            metric_snapshot snap;

            auto sample_aswr = [&]() {
                if (br) {
                    res.final_aswr = br->aswr();
                    res.aswr_trace.emplace_back(target_step, res.final_aswr);
                } else if (brpw) {
                    res.final_aswr = brpw->aswr_br();
                    res.final_aswr_pw = brpw->aswr_pw();
                    res.aswr_trace.emplace_back(target_step, res.final_aswr);
                    res.aswr_pw_trace.emplace_back(target_step, res.final_aswr_pw);
                }
                if (sink.active() && !dummy) {
                    aswr_csv << target_step << ',' << csv_double(res.final_aswr);
                    if (brpw) aswr_csv << ',' << csv_double(res.final_aswr_pw);
                    aswr_csv << "\n";
                }
            };

            for (const instance& ev : run.schedule) {
                if (ev.stream.is_target()) {
                    ++target_step;

                    auto predict_start = clock_type::now();
                    std::vector<std::uint8_t> y_hat(run.n_labels, 0);
                    if (br && br->target_registered()) y_hat = br->predict(ev.x).y_hat;
                    else if (brpw && brpw->br().target_registered())
                        y_hat = brpw->predict(ev.x).y_hat;
                    else if (dummy) y_hat = dummy->predict();
                    res.predict_s += seconds_since(predict_start);

                    auto eval_start = clock_type::now();
                    for (const drift_spec& spec : run.ground_truth)
                        if (spec.start == ev.t) tracker.reset(spec.label);
                    snap = evaluator.step(y_hat, ev.y);
                    tracker.step(y_hat, ev.y);
                    res.macro_trace.push_back(snap.macro_gmean);
                    for (std::size_t q = 0; q < run.n_labels; ++q)
                        res.label_gmean_trace[q].push_back(tracker.gmean_of(q));
                    if (sink.active()) {
                        metrics_csv << snapshot_csv_row(target_step, snap) << "\n";
                        curves_csv << target_step;
                        for (std::size_t q = 0; q < run.n_labels; ++q)
                            curves_csv << ',' << csv_double(tracker.gmean_of(q));
                        curves_csv << "\n";
                    }
                    res.evaluate_s += seconds_since(eval_start);
                }

                auto train_start = clock_type::now();
                if (br) {
                    observe_report rep = br->observe(ev);
                    std::vector<std::size_t> labels;
                    for (std::size_t idx : rep.spawned)
                        labels.push_back(br->members()[idx].origin.label);
                    log_report(rep, "label", target_step, ev.stream.index, res.drift_events,
                               &labels);
                } else if (brpw) {
                    brpw_report rep = brpw->observe(ev);
                    std::vector<std::size_t> labels;
                    for (std::size_t idx : rep.br.spawned)
                        labels.push_back(brpw->br().members()[idx].origin.label);
                    log_report(rep.br, "label", target_step, ev.stream.index, res.drift_events,
                               &labels);
                    std::vector<std::size_t> pairs;
                    for (std::size_t idx : rep.pw.spawned) {
                        const pair_id& p = brpw->pw_members()[idx].origin.pair;
                        pairs.push_back(pair_index(p.q, p.q_prime, ev.y.size()));
                    }
                    log_report(rep.pw, "pair", target_step, ev.stream.index, res.drift_events,
                               &pairs);
                } else if (ev.stream.is_target()) {
                    dummy->observe(ev.y);
                }
                res.train_s += seconds_since(train_start);

                if (sink.active() && !dummy) {
                    for (; drift_logged < res.drift_events.size(); ++drift_logged) {
                        const drift_event_record& rec = res.drift_events[drift_logged];
                        drift_csv << rec.target_step << ',' << rec.stream << ',' << rec.scope
                                  << ',' << rec.index << ',' << rec.what << "\n";
                    }
                }

                if (ev.stream.is_target() &&
                    (target_step % cfg.aswr_every == 0 || target_step == run.n_target))
                    sample_aswr();
            }

            if (res.aswr_trace.empty()) sample_aswr();
            res.final_snapshot = snap;
            if (br) res.n_members = br->members().size();
            if (brpw) {
                res.n_members = brpw->br().members().size();
                res.n_pw_members = brpw->pw_members().size();
            }
            res.runtime_s = seconds_since(run_start);
            artifacts.per_seed.push_back(std::move(res));
        }

        artifacts.mean = elementwise(artifacts.per_seed, false);
        artifacts.stdev = elementwise(artifacts.per_seed, true);
        for (const auto& r : artifacts.per_seed) artifacts.mean_runtime_s += r.runtime_s;
        artifacts.mean_runtime_s /= static_cast<double>(artifacts.per_seed.size());

        if (sink.active()) {
            auto summary = sink.open("summary.csv");
            summary << "seed,macro_gmean,micro_gmean,ls_gmean,hscore,hloss,runtime_s\n";
            auto row = [&](const std::string& name, const metric_snapshot& s, double rt) {
                summary << name << ',' << csv_double(s.macro_gmean) << ','
                        << csv_double(s.micro_gmean) << ',' << csv_double(s.ls_gmean) << ','
                        << csv_double(s.hscore) << ',' << csv_double(s.hloss) << ','
                        << csv_double(rt) << "\n";
            };
            for (const auto& r : artifacts.per_seed)
                row(std::to_string(r.seed), r.final_snapshot, r.runtime_s);
            row("mean", artifacts.mean, artifacts.mean_runtime_s);
            row("stdev", artifacts.stdev, 0.0);

            auto timing = sink.open("timing.csv");
            timing << "seed,parse_s,predict_s,train_s,evaluate_s,total_s\n";
            for (const auto& r : artifacts.per_seed)
                timing << r.seed << ',' << csv_double(r.parse_s) << ','
                       << csv_double(r.predict_s) << ',' << csv_double(r.train_s) << ','
                       << csv_double(r.evaluate_s) << ',' << csv_double(r.runtime_s) << "\n";
        }
    } catch (...) {
        for (const std::string& f : artifacts.files) {
            std::error_code ec;
            fs::remove(f, ec);
        }
        throw;
    }
    return artifacts;
}

} // namespace marlene
