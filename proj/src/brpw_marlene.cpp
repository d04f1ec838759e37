#include "marlene/brpw_marlene.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>

namespace marlene {

using nlohmann::json;

namespace {

constexpr std::uint64_t pw_rng_salt = 0x70616972u; // keeps the br draw sequence untouched
constexpr std::size_t max_labels_without_override = 32;

std::pair<double, double> normalized(double neg, double pos) {
    double s = neg + pos;
    if (s <= 0.0) return {0.5, 0.5}; // an abstaining vote
    return {neg / s, pos / s};
}

} // namespace

std::size_t pair_index(std::size_t q, std::size_t q_prime, std::size_t n_labels) {
    if (q == q_prime || q >= n_labels || q_prime >= n_labels)
        throw std::invalid_argument("bad ordered label pair");
    return q * (n_labels - 1) + (q_prime < q ? q_prime : q_prime - 1);
}

pair_id pair_from_index(std::size_t idx, std::size_t n_labels) {
    if (n_labels < 2 || idx >= n_labels * (n_labels - 1))
        throw std::invalid_argument("pair index out of range");
    std::size_t q = idx / (n_labels - 1);
    std::size_t r = idx % (n_labels - 1);
    return {q, r < q ? r : r + 1};
}

void brpw_config::validate() const { br.validate(); }

brpw_ensemble::brpw_ensemble(brpw_config cfg)
    : cfg_(std::move(cfg)), br_(cfg_.br), pw_rng_(derive_seed(cfg_.br.seed, pw_rng_salt)) {}

std::vector<double> brpw_ensemble::augmented(const std::vector<double>& x, int y_q) const {
    std::vector<double> aug;
    aug.reserve(x.size() + 1);
    aug = x;
    aug.push_back(static_cast<double>(y_q));
    return aug;
}

std::size_t brpw_ensemble::spawn_pw(stream_id s, pair_id p, observe_report& rep) {
    pw_slot key{s.index, p.q, p.q_prime};
    std::uint64_t gen = pw_next_generation_[key]++;
    std::size_t idx = pw_members_.size();

    if (cfg_.br.max_members_per_slot > 0) {
        std::vector<std::size_t> in_slot;
        for (std::size_t m = 0; m < pw_members_.size(); ++m)
            if (pw_members_[m].origin.stream == s && pw_members_[m].origin.pair == p)
                in_slot.push_back(m);
        if (in_slot.size() >= cfg_.br.max_members_per_slot) {
            idx = *std::min_element(in_slot.begin(), in_slot.end(),
                                    [&](std::size_t a, std::size_t b) {
                                        return pw_members_[a].origin.generation <
                                               pw_members_[b].origin.generation;
                                    });
            pw_members_[idx] = pw_classifier{};
        }
    }
    if (idx == pw_members_.size()) pw_members_.emplace_back();

    learner_config base = cfg_.br.base;
    if (!base.feature_kinds.empty()) base.feature_kinds.push_back(feature_kind::binary);

    pw_classifier& mem = pw_members_[idx];
    mem.model = make_learner(base);
    mem.origin = {s, p, gen};
    mem.per_target_pair.assign(n_target_pairs_, label_indicators{});
    pw_latest_[key] = idx;
    rep.spawned.push_back(idx);
    return idx;
}

void brpw_ensemble::register_pw_stream(const instance& ev, observe_report& rep) {
    pw_streams_.insert(ev.stream.index);
    const std::size_t n_labels = ev.y.size();
    if (ev.stream.is_target()) {
        n_target_pairs_ = n_labels * (n_labels - 1);
        for (auto& mem : pw_members_)
            mem.per_target_pair.assign(n_target_pairs_, label_indicators{});
    }
    for (std::size_t q = 0; q < n_labels; ++q)
        for (std::size_t qp = 0; qp < n_labels; ++qp) {
            if (qp == q) continue;
            pw_detectors_.emplace(pw_slot{ev.stream.index, q, qp}, drift_detector(cfg_.br.drift));
            spawn_pw(ev.stream, {q, qp}, rep);
        }
}

brpw_report brpw_ensemble::observe(const instance& ev) {
    if (!pw_streams_.count(ev.stream.index) && ev.y.size() > max_labels_without_override &&
        !cfg_.allow_many_labels)
        throw std::invalid_argument(
            "stream " + std::to_string(ev.stream.index) + " has " + std::to_string(ev.y.size()) +
            " labels; the pairwise ensemble grows quadratically, pass allow_many_labels to force");

    brpw_report rep;
    rep.br = br_.observe(ev);

    const bool is_target = ev.stream.is_target();
    const std::size_t n_labels = ev.y.size();
    if (!pw_streams_.count(ev.stream.index)) register_pw_stream(ev, rep.pw);

    // pair drift checks on raw pre-training predictions, conditioned on the
    // true label
    for (std::size_t q = 0; q < n_labels; ++q) {
        std::vector<double> aug = augmented(ev.x, ev.y[q]);
        for (std::size_t qp = 0; qp < n_labels; ++qp) {
            if (qp == q) continue;
            pw_slot key{ev.stream.index, q, qp};
            std::size_t m = pw_latest_.at(key);
            proba p = pw_members_[m].model->predict(aug);
            drift_signal sig = pw_detectors_.at(key).update(ev.y[qp], hard_label(p.pos));
            std::size_t idx = pair_index(q, qp, n_labels);
            if (sig != drift_signal::stable) rep.pw.signals.emplace_back(idx, sig);
            if (sig == drift_signal::drift) {
                spawn_pw(ev.stream, {q, qp}, rep.pw);
                if (is_target) {
                    for (auto& mem : pw_members_) mem.per_target_pair[idx].reset();
                    rep.pw.reset_labels.push_back(idx);
                }
            }
        }
    }

    // every member's raw output on every conditioned input, pre-training
    std::vector<std::vector<proba>> raw;
    if (is_target) {
        raw.assign(pw_members_.size(), std::vector<proba>(n_labels));
        for (std::size_t q = 0; q < n_labels; ++q) {
            std::vector<double> aug = augmented(ev.x, ev.y[q]);
            for (std::size_t m = 0; m < pw_members_.size(); ++m)
                raw[m][q] = pw_members_[m].model->predict(aug);
        }
    }

    // train the latest member of each pair on the true conditioning label
    for (std::size_t q = 0; q < n_labels; ++q) {
        std::vector<double> aug = augmented(ev.x, ev.y[q]);
        for (std::size_t qp = 0; qp < n_labels; ++qp) {
            if (qp == q) continue;
            pw_classifier& mem = pw_members_[pw_latest_.at(pw_slot{ev.stream.index, q, qp})];
            (ev.y[qp] ? mem.train_n_pos : mem.train_n_neg) += 1;
            double rate = poisson_rate(mem.train_n_pos, mem.train_n_neg, ev.y[qp]);
            std::uint64_t k = pw_rng_.poisson(rate);
            if (k > 0) mem.model->train(aug, ev.y[qp], k);
        }
    }

    // pair weight updates from the pre-training predictions
    if (is_target) {
        std::vector<double> p_true(pw_members_.size());
        std::vector<int> hard(pw_members_.size());
        for (std::size_t q = 0; q < n_labels; ++q)
            for (std::size_t qp = 0; qp < n_labels; ++qp) {
                if (qp == q) continue;
                std::size_t idx = pair_index(q, qp, n_labels);
                const int y = ev.y[qp];
                double lambda_sc = 0.0, lambda_sw = 0.0;
                for (std::size_t m = 0; m < pw_members_.size(); ++m) {
                    auto [ppv, npv] = ppv_npv(pw_members_[m].per_target_pair[idx]);
                    proba cal = calibrate(raw[m][q], ppv, npv);
                    p_true[m] = y ? cal.pos : cal.neg;
                    // record the member's own output, not the calibrated one;
                    // see the matching note in the per-label ensemble
                    hard[m] = hard_label(raw[m][q].pos);
                    lambda_sc += y ? cal.pos : cal.neg;
                    lambda_sw += y ? cal.neg : cal.pos;
                }
                for (std::size_t m = 0; m < pw_members_.size(); ++m) {
                    label_indicators& ind = pw_members_[m].per_target_pair[idx];
                    ind.record(y, hard[m]);
                    if (lambda_sc > 0.0) update_scores(ind, p_true[m], lambda_sc, lambda_sw);
                }
            }
    }

    if (pw_trace_) {
        pw_event_trace t;
        t.is_target = is_target;
        for (std::size_t idx : rep.pw.spawned) t.spawns.emplace_back(idx, pw_members_[idx].origin);
        t.resets = rep.pw.reset_labels;
        t.raw = std::move(raw);
        pw_trace_->events.push_back(std::move(t));
    }
    return rep;
}

std::pair<double, double> brpw_ensemble::pair_score(std::size_t q, std::size_t q_prime,
                                                    const std::vector<double>& x,
                                                    int y_hat_q) const {
    if (!br_.target_registered()) throw std::logic_error("target stream not registered");
    std::size_t idx = pair_index(q, q_prime, br_.n_target_labels());
    std::vector<double> aug = augmented(x, y_hat_q);
    double neg = 0.0, pos = 0.0;
    for (const auto& mem : pw_members_) {
        const label_indicators& ind = mem.per_target_pair[idx];
        auto [ppv, npv] = ppv_npv(ind);
        proba cal = calibrate(mem.model->predict(aug), ppv, npv);
        double a = ind.alpha();
        neg += a * cal.neg;
        pos += a * cal.pos;
    }
    return {neg, pos};
}

br_prediction brpw_ensemble::predict(const std::vector<double>& x) const {
    br_prediction base = br_.predict(x);
    const std::size_t n_labels = br_.n_target_labels();

    // member raw outputs on each input conditioned with the first-stage
    // prediction
    std::vector<std::vector<proba>> raw(pw_members_.size(), std::vector<proba>(n_labels));
    for (std::size_t q = 0; q < n_labels; ++q) {
        std::vector<double> aug = augmented(x, base.y_hat[q]);
        for (std::size_t m = 0; m < pw_members_.size(); ++m)
            raw[m][q] = pw_members_[m].model->predict(aug);
    }

    br_prediction out;
    out.score_neg.assign(n_labels, 0.0);
    out.score_pos.assign(n_labels, 0.0);
    out.y_hat.assign(n_labels, 0);
    for (std::size_t qp = 0; qp < n_labels; ++qp) {
        double neg = base.score_neg[qp], pos = base.score_pos[qp];
        if (!cfg_.raw_sum) std::tie(neg, pos) = normalized(neg, pos);
        for (std::size_t q = 0; q < n_labels; ++q) {
            if (q == qp) continue;
            std::size_t idx = pair_index(q, qp, n_labels);
            double pn = 0.0, pp = 0.0;
            for (std::size_t m = 0; m < pw_members_.size(); ++m) {
                const label_indicators& ind = pw_members_[m].per_target_pair[idx];
                auto [ppv, npv] = ppv_npv(ind);
                proba cal = calibrate(raw[m][q], ppv, npv);
                double a = ind.alpha();
                pn += a * cal.neg;
                pp += a * cal.pos;
            }
            if (!cfg_.raw_sum) std::tie(pn, pp) = normalized(pn, pp);
            neg += pn;
            pos += pp;
        }
        out.score_neg[qp] = neg;
        out.score_pos[qp] = pos;
        out.y_hat[qp] = pos > neg ? 1 : 0;
    }
    return out;
}

double brpw_ensemble::aswr_pw() const {
    if (!br_.target_registered()) throw std::logic_error("target stream not registered");
    if (n_target_pairs_ == 0) return 0.5;
    const std::size_t n_labels = br_.n_target_labels();
    double acc = 0.0;
    for (std::size_t idx = 0; idx < n_target_pairs_; ++idx) {
        pair_id pid = pair_from_index(idx, n_labels);
        double total = 0.0, from_elsewhere = 0.0;
        for (const auto& mem : pw_members_) {
            double a = mem.per_target_pair[idx].alpha();
            total += a;
            bool own = mem.origin.stream.is_target() && mem.origin.pair == pid;
            if (!own) from_elsewhere += a;
        }
        acc += total > 0.0 ? from_elsewhere / total : 0.5;
    }
    return acc / static_cast<double>(n_target_pairs_);
}

namespace {

json pw_origin_to_json(const pw_origin& o) {
    return json{{"stream", o.stream.index},
                {"q", o.pair.q},
                {"q_prime", o.pair.q_prime},
                {"generation", o.generation}};
}

pw_origin pw_origin_from_json(const json& j) {
    pw_origin o;
    o.stream.index = j.at("stream").get<int>();
    o.pair.q = j.at("q").get<std::size_t>();
    o.pair.q_prime = j.at("q_prime").get<std::size_t>();
    o.generation = j.at("generation").get<std::uint64_t>();
    return o;
}

} // namespace

json brpw_ensemble::to_json() const {
    json members = json::array();
    for (const auto& mem : pw_members_) {
        json inds = json::array();
        for (const auto& ind : mem.per_target_pair) inds.push_back(ind.to_json());
        members.push_back(json{{"model", mem.model->to_json()},
                               {"origin", pw_origin_to_json(mem.origin)},
                               {"indicators", std::move(inds)},
                               {"train_n_pos", mem.train_n_pos},
                               {"train_n_neg", mem.train_n_neg}});
    }
    auto slot_json = [](const pw_slot& key) {
        return json{{"stream", std::get<0>(key)}, {"q", std::get<1>(key)},
                    {"q_prime", std::get<2>(key)}};
    };
    json detectors = json::array();
    for (const auto& [key, det] : pw_detectors_) {
        json e = slot_json(key);
        e["state"] = det.to_json();
        detectors.push_back(std::move(e));
    }
    json latest = json::array();
    for (const auto& [key, idx] : pw_latest_) {
        json e = slot_json(key);
        e["member"] = idx;
        latest.push_back(std::move(e));
    }
    json gens = json::array();
    for (const auto& [key, g] : pw_next_generation_) {
        json e = slot_json(key);
        e["next"] = g;
        gens.push_back(std::move(e));
    }

    return json{{"format", "marlene-brpw"},
                {"version", 1},
                {"raw_sum", cfg_.raw_sum},
                {"allow_many_labels", cfg_.allow_many_labels},
                {"br", br_.to_json()},
                {"pw_rng", pw_rng_.save_state()},
                {"n_target_pairs", n_target_pairs_},
                {"pw_streams", std::vector<int>(pw_streams_.begin(), pw_streams_.end())},
                {"pw_members", std::move(members)},
                {"pw_detectors", std::move(detectors)},
                {"pw_latest", std::move(latest)},
                {"pw_next_generation", std::move(gens)}};
}

brpw_ensemble brpw_ensemble::from_json(const json& j) {
    if (j.at("format").get<std::string>() != "marlene-brpw")
        throw std::invalid_argument("not a pairwise ensemble checkpoint");
    if (j.at("version").get<int>() != 1)
        throw std::invalid_argument("unsupported checkpoint version");

    br_ensemble br = br_ensemble::from_json(j.at("br"));
    brpw_config cfg;
    cfg.br = br.config();
    cfg.raw_sum = j.at("raw_sum").get<bool>();
    cfg.allow_many_labels = j.at("allow_many_labels").get<bool>();

    brpw_ensemble ens(cfg);
    ens.br_ = std::move(br);
    ens.pw_rng_.load_state(j.at("pw_rng").get<std::string>());
    ens.n_target_pairs_ = j.at("n_target_pairs").get<std::size_t>();
    for (int s : j.at("pw_streams").get<std::vector<int>>()) ens.pw_streams_.insert(s);

    for (const json& jm : j.at("pw_members")) {
        pw_classifier mem;
        mem.model = learner_from_json(jm.at("model"));
        mem.origin = pw_origin_from_json(jm.at("origin"));
        for (const json& ji : jm.at("indicators"))
            mem.per_target_pair.push_back(label_indicators::from_json(ji));
        mem.train_n_pos = jm.at("train_n_pos").get<std::uint64_t>();
        mem.train_n_neg = jm.at("train_n_neg").get<std::uint64_t>();
        ens.pw_members_.push_back(std::move(mem));
    }
    auto slot_of = [](const json& e) {
        return pw_slot{e.at("stream").get<int>(), e.at("q").get<std::size_t>(),
                       e.at("q_prime").get<std::size_t>()};
    };
    for (const json& jd : j.at("pw_detectors"))
        ens.pw_detectors_.emplace(slot_of(jd), drift_detector::from_json(jd.at("state")));
    for (const json& jl : j.at("pw_latest"))
        ens.pw_latest_[slot_of(jl)] = jl.at("member").get<std::size_t>();
    for (const json& jg : j.at("pw_next_generation"))
        ens.pw_next_generation_[slot_of(jg)] = jg.at("next").get<std::uint64_t>();
    return ens;
}

} // namespace marlene
