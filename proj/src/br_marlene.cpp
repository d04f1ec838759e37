#include "marlene/br_marlene.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>

namespace marlene {

using nlohmann::json;

void br_config::validate() const {
    base.validate();
    drift.validate();
}

br_ensemble::br_ensemble(br_config cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
    cfg_.validate();
}

void br_ensemble::validate_event(const instance& ev) const {
    if (ev.y.empty()) throw std::invalid_argument("event has no labels");
    if (n_features_ > 0 && ev.x.size() != n_features_)
        throw std::invalid_argument("event has " + std::to_string(ev.x.size()) +
                                    " features, ensemble expects " + std::to_string(n_features_));
    auto it = stream_arity_.find(ev.stream.index);
    if (it != stream_arity_.end() && it->second != ev.y.size())
        throw std::invalid_argument("stream " + std::to_string(ev.stream.index) + " has " +
                                    std::to_string(it->second) + " labels, event carries " +
                                    std::to_string(ev.y.size()));
}

std::size_t br_ensemble::spawn(stream_id s, std::size_t label, observe_report& rep) {
    slot key{s.index, label};
    std::uint64_t gen = next_generation_[key]++;
    std::size_t idx = members_.size();

    if (cfg_.max_members_per_slot > 0) {
        std::vector<std::size_t> in_slot;
        for (std::size_t m = 0; m < members_.size(); ++m)
            if (members_[m].origin.stream == s && members_[m].origin.label == label)
                in_slot.push_back(m);
        if (in_slot.size() >= cfg_.max_members_per_slot) {
            // recycle the oldest concept of this slot in place
            idx = *std::min_element(in_slot.begin(), in_slot.end(),
                                    [&](std::size_t a, std::size_t b) {
                                        return members_[a].origin.generation <
                                               members_[b].origin.generation;
                                    });
            members_[idx] = sub_classifier{};
        }
    }
    if (idx == members_.size()) members_.emplace_back();

    sub_classifier& mem = members_[idx];
    mem.model = make_learner(cfg_.base);
    mem.origin = {s, label, gen};
    mem.per_target_label.assign(n_target_labels_, label_indicators{});
    latest_[key] = idx;
    rep.spawned.push_back(idx);
    return idx;
}

void br_ensemble::register_stream(const instance& ev, observe_report& rep) {
    if (n_features_ == 0) {
        if (ev.x.empty()) throw std::invalid_argument("event has no features");
        n_features_ = ev.x.size();
    }
    stream_arity_[ev.stream.index] = ev.y.size();
    if (ev.stream.is_target()) {
        n_target_labels_ = ev.y.size();
        for (auto& mem : members_) mem.per_target_label.assign(n_target_labels_, label_indicators{});
    }
    for (std::size_t q = 0; q < ev.y.size(); ++q) {
        detectors_.emplace(slot{ev.stream.index, q}, drift_detector(cfg_.drift));
        spawn(ev.stream, q, rep);
    }
}

proba br_ensemble::calibrated(std::size_t m, std::size_t q, const std::vector<double>& x) const {
    const sub_classifier& mem = members_.at(m);
    auto [ppv, npv] = ppv_npv(mem.per_target_label.at(q));
    return calibrate(mem.model->predict(x), ppv, npv);
}

observe_report br_ensemble::observe(const instance& ev) {
    validate_event(ev);
    observe_report rep;
    if (!stream_arity_.count(ev.stream.index)) register_stream(ev, rep);

    const bool is_target = ev.stream.is_target();
    const std::size_t n_labels = ev.y.size();

    // drift checks on predictions made before any training this event; the
    // raw model output is monitored, not the calibrated one, because the
    // reliability correction adapts against a broken member's errors and
    // would mask the very collapse being watched for
    for (std::size_t q = 0; q < n_labels; ++q) {
        slot key{ev.stream.index, q};
        std::size_t m = latest_.at(key);
        proba p = members_[m].model->predict(ev.x);
        drift_signal sig = detectors_.at(key).update(ev.y[q], hard_label(p.pos));
        if (sig != drift_signal::stable) rep.signals.emplace_back(q, sig);
        if (sig == drift_signal::drift) {
            spawn(ev.stream, q, rep);
            if (is_target) {
                for (auto& mem : members_) mem.per_target_label[q].reset();
                rep.reset_labels.push_back(q);
            }
        }
    }

    // every member's raw output, captured before training, drives the
    // weight step below
    std::vector<proba> raw;
    if (is_target) {
        raw.reserve(members_.size());
        for (const auto& mem : members_) raw.push_back(mem.model->predict(ev.x));
    }

    // imbalance-aware training of the latest member per label
    for (std::size_t q = 0; q < n_labels; ++q) {
        sub_classifier& mem = members_[latest_.at(slot{ev.stream.index, q})];
        (ev.y[q] ? mem.train_n_pos : mem.train_n_neg) += 1;
        double rate = poisson_rate(mem.train_n_pos, mem.train_n_neg, ev.y[q]);
        std::uint64_t k = rng_.poisson(rate);
        if (k > 0) mem.model->train(ev.x, ev.y[q], k);
    }

    // indicator and weight updates for every member and target label, all
    // from the pre-training predictions and pre-event indicator state
    if (is_target) {
        std::vector<double> p_true(members_.size());
        std::vector<int> hard(members_.size());
        for (std::size_t q = 0; q < n_labels; ++q) {
            double lambda_sc = 0.0, lambda_sw = 0.0;
            for (std::size_t m = 0; m < members_.size(); ++m) {
                auto [ppv, npv] = ppv_npv(members_[m].per_target_label[q]);
                proba cal = calibrate(raw[m], ppv, npv);
                p_true[m] = ev.y[q] ? cal.pos : cal.neg;
                // confusion counts track the member's own output; feeding the
                // calibrated label back in lets one early miss pin NPV (or PPV)
                // at zero, and the inverted calibration then locks it there
                hard[m] = hard_label(raw[m].pos);
                lambda_sc += p_true[m];
                lambda_sw += ev.y[q] ? cal.neg : cal.pos;
            }
            // lambda_sc is exactly 0 when every member's calibration pins
            // the true class to probability 0 (PPV=0 with NPV=1, or the
            // mirror); the score update is undefined there, so only the
            // confusion counts advance
            for (std::size_t m = 0; m < members_.size(); ++m) {
                label_indicators& ind = members_[m].per_target_label[q];
                ind.record(ev.y[q], hard[m]);
                if (lambda_sc > 0.0) update_scores(ind, p_true[m], lambda_sc, lambda_sw);
            }
        }
    }

    if (trace_) {
        br_event_trace t;
        t.is_target = is_target;
        for (std::size_t idx : rep.spawned) t.spawns.emplace_back(idx, members_[idx].origin);
        t.resets = rep.reset_labels;
        t.raw = std::move(raw);
        trace_->events.push_back(std::move(t));
    }
    return rep;
}

br_prediction br_ensemble::predict(const std::vector<double>& x) const {
    if (!target_registered()) throw std::logic_error("target stream not registered");
    br_prediction out;
    out.score_neg.assign(n_target_labels_, 0.0);
    out.score_pos.assign(n_target_labels_, 0.0);
    out.y_hat.assign(n_target_labels_, 0);

    std::vector<proba> raw;
    raw.reserve(members_.size());
    for (const auto& mem : members_) raw.push_back(mem.model->predict(x));

    for (std::size_t q = 0; q < n_target_labels_; ++q) {
        for (std::size_t m = 0; m < members_.size(); ++m) {
            const label_indicators& ind = members_[m].per_target_label[q];
            auto [ppv, npv] = ppv_npv(ind);
            proba cal = calibrate(raw[m], ppv, npv);
            double a = ind.alpha();
            out.score_neg[q] += a * cal.neg;
            out.score_pos[q] += a * cal.pos;
        }
        out.y_hat[q] = out.score_pos[q] > out.score_neg[q] ? 1 : 0;
    }
    return out;
}

double br_ensemble::aswr() const {
    if (!target_registered()) throw std::logic_error("target stream not registered");
    if (members_.empty()) throw std::logic_error("ensemble has no members");
    double acc = 0.0;
    for (std::size_t q = 0; q < n_target_labels_; ++q) {
        double total = 0.0, from_elsewhere = 0.0;
        for (const auto& mem : members_) {
            double a = mem.per_target_label[q].alpha();
            total += a;
            bool own = mem.origin.stream.is_target() && mem.origin.label == q;
            if (!own) from_elsewhere += a;
        }
        acc += total > 0.0 ? from_elsewhere / total : 0.5;
    }
    return acc / static_cast<double>(n_target_labels_);
}

std::pair<double, double> example_difficulty(const br_ensemble& ens, const std::vector<double>& x,
                                             int y_true, std::size_t q) {
    if (!ens.target_registered()) throw std::logic_error("target stream not registered");
    if (ens.members().empty()) throw std::logic_error("ensemble has no members");
    double sc = 0.0, sw = 0.0;
    for (std::size_t m = 0; m < ens.members().size(); ++m) {
        proba cal = ens.calibrated(m, q, x);
        sc += y_true ? cal.pos : cal.neg;
        sw += y_true ? cal.neg : cal.pos;
    }
    return {sc, sw};
}

namespace {

json origin_to_json(const member_origin& o) {
    return json{{"stream", o.stream.index}, {"label", o.label}, {"generation", o.generation}};
}

member_origin origin_from_json(const json& j) {
    member_origin o;
    o.stream.index = j.at("stream").get<int>();
    o.label = j.at("label").get<std::size_t>();
    o.generation = j.at("generation").get<std::uint64_t>();
    return o;
}

} // namespace

json br_ensemble::to_json() const {
    json members = json::array();
    for (const auto& mem : members_) {
        json inds = json::array();
        for (const auto& ind : mem.per_target_label) inds.push_back(ind.to_json());
        members.push_back(json{{"model", mem.model->to_json()},
                               {"origin", origin_to_json(mem.origin)},
                               {"indicators", std::move(inds)},
                               {"train_n_pos", mem.train_n_pos},
                               {"train_n_neg", mem.train_n_neg}});
    }
    json detectors = json::array();
    for (const auto& [key, det] : detectors_)
        detectors.push_back(
            json{{"stream", key.first}, {"label", key.second}, {"state", det.to_json()}});
    json latest = json::array();
    for (const auto& [key, idx] : latest_)
        latest.push_back(json{{"stream", key.first}, {"label", key.second}, {"member", idx}});
    json gens = json::array();
    for (const auto& [key, g] : next_generation_)
        gens.push_back(json{{"stream", key.first}, {"label", key.second}, {"next", g}});
    json arities = json::array();
    for (const auto& [idx, n] : stream_arity_)
        arities.push_back(json{{"stream", idx}, {"labels", n}});

    return json{{"format", "marlene-br"},
                {"version", 1},
                {"config",
                 json{{"base", learner_config_to_json(cfg_.base)},
                      {"drift", drift_config_to_json(cfg_.drift)},
                      {"seed", cfg_.seed},
                      {"max_members_per_slot", cfg_.max_members_per_slot}}},
                {"rng", rng_.save_state()},
                {"n_features", n_features_},
                {"n_target_labels", n_target_labels_},
                {"members", std::move(members)},
                {"detectors", std::move(detectors)},
                {"latest", std::move(latest)},
                {"next_generation", std::move(gens)},
                {"streams", std::move(arities)}};
}

br_ensemble br_ensemble::from_json(const json& j) {
    if (j.at("format").get<std::string>() != "marlene-br")
        throw std::invalid_argument("not an ensemble checkpoint");
    if (j.at("version").get<int>() != 1)
        throw std::invalid_argument("unsupported checkpoint version");

    br_config cfg;
    const json& jc = j.at("config");
    cfg.base = learner_config_from_json(jc.at("base"));
    cfg.drift = drift_config_from_json(jc.at("drift"));
    cfg.seed = jc.at("seed").get<std::uint64_t>();
    cfg.max_members_per_slot = jc.at("max_members_per_slot").get<std::size_t>();

    br_ensemble ens(cfg);
    ens.rng_.load_state(j.at("rng").get<std::string>());
    ens.n_features_ = j.at("n_features").get<std::size_t>();
    ens.n_target_labels_ = j.at("n_target_labels").get<std::size_t>();

    for (const json& jm : j.at("members")) {
        sub_classifier mem;
        mem.model = learner_from_json(jm.at("model"));
        mem.origin = origin_from_json(jm.at("origin"));
        for (const json& ji : jm.at("indicators"))
            mem.per_target_label.push_back(label_indicators::from_json(ji));
        mem.train_n_pos = jm.at("train_n_pos").get<std::uint64_t>();
        mem.train_n_neg = jm.at("train_n_neg").get<std::uint64_t>();
        ens.members_.push_back(std::move(mem));
    }
    for (const json& jd : j.at("detectors"))
        ens.detectors_.emplace(slot{jd.at("stream").get<int>(), jd.at("label").get<std::size_t>()},
                               drift_detector::from_json(jd.at("state")));
    for (const json& jl : j.at("latest"))
        ens.latest_[slot{jl.at("stream").get<int>(), jl.at("label").get<std::size_t>()}] =
            jl.at("member").get<std::size_t>();
    for (const json& jg : j.at("next_generation"))
        ens.next_generation_[slot{jg.at("stream").get<int>(), jg.at("label").get<std::size_t>()}] =
            jg.at("next").get<std::uint64_t>();
    for (const json& js : j.at("streams"))
        ens.stream_arity_[js.at("stream").get<int>()] = js.at("labels").get<std::size_t>();
    return ens;
}

} // namespace marlene
