#pragma once

#include "marlene/br_marlene.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

namespace marlene {

// ordered label pair: the model reads label q as an extra input feature and
// predicts label q_prime
struct pair_id {
    std::size_t q = 0;
    std::size_t q_prime = 0;

    bool operator==(const pair_id&) const = default;
    auto operator<=>(const pair_id&) const = default;
};

struct pw_origin {
    stream_id stream;
    pair_id pair;
    std::uint64_t generation = 0;

    bool operator==(const pw_origin&) const = default;
};

struct pw_classifier {
    std::unique_ptr<binary_learner> model; // input is x with the conditioning label appended
    pw_origin origin;
    std::vector<label_indicators> per_target_pair; // one per ordered target pair
    std::uint64_t train_n_pos = 0, train_n_neg = 0;
};

struct brpw_config {
    br_config br;
    // literal additive combination of the per-ensemble vote vectors instead
    // of normalizing each to a distribution first
    bool raw_sum = false;
    // lifts the refusal of streams with more than 32 labels (pair count
    // grows quadratically)
    bool allow_many_labels = false;

    void validate() const;
};

// Per-event instrumentation mirroring br_trace: spawned pair members, reset
// target-pair indices, and each member's raw predictions on every
// conditioned input (x with true label q appended), captured pre-training.
struct pw_event_trace {
    bool is_target = false;
    std::vector<std::pair<std::size_t, pw_origin>> spawns;
    std::vector<std::size_t> resets;          // canonical target pair indices
    std::vector<std::vector<proba>> raw;      // [member][conditioning label]
};

struct pw_trace {
    std::vector<pw_event_trace> events;
};

struct brpw_report {
    observe_report br;
    // pw indices are canonical ordered-pair indices of the event's stream:
    // idx = q*(L-1) + (q' < q ? q' : q'-1)
    observe_report pw;
};

// canonical ordered-pair indexing for a stream with n_labels labels
std::size_t pair_index(std::size_t q, std::size_t q_prime, std::size_t n_labels);
pair_id pair_from_index(std::size_t idx, std::size_t n_labels);

// The pairwise extension: a full binary-relevance ensemble plus one
// classifier per ordered label pair per stream, trained on the true
// conditioning label and queried with the BR vote's prediction, combined
// into the final per-label vote.
class brpw_ensemble {
public:
    explicit brpw_ensemble(brpw_config cfg = {});

    brpw_report observe(const instance& ev);

    // two-stage combined vote; pure
    br_prediction predict(const std::vector<double>& x) const;

    // raw pair vote for target pair (q,q'): weighted class scores over all
    // pair members evaluated at x with y_hat_q appended
    std::pair<double, double> pair_score(std::size_t q, std::size_t q_prime,
                                         const std::vector<double>& x, int y_hat_q) const;

    double aswr_br() const { return br_.aswr(); }
    // weight fraction held by pair members outside each target pair's own
    // lineage; 0.5 when the target has no pairs
    double aswr_pw() const;

    const brpw_config& config() const { return cfg_; }
    const br_ensemble& br() const { return br_; }
    const std::vector<pw_classifier>& pw_members() const { return pw_members_; }
    std::size_t n_target_pairs() const { return n_target_pairs_; }

    void set_trace(br_trace* sink) { br_.set_trace(sink); }
    void set_pw_trace(pw_trace* sink) { pw_trace_ = sink; }

    nlohmann::json to_json() const;
    static brpw_ensemble from_json(const nlohmann::json& j);

private:
    using pw_slot = std::tuple<int, std::size_t, std::size_t>; // (stream, q, q')

    void register_pw_stream(const instance& ev, observe_report& rep);
    std::size_t spawn_pw(stream_id s, pair_id p, observe_report& rep);
    std::vector<double> augmented(const std::vector<double>& x, int y_q) const;

    brpw_config cfg_;
    br_ensemble br_;
    rng pw_rng_;
    std::vector<pw_classifier> pw_members_;
    std::map<pw_slot, drift_detector> pw_detectors_;
    std::map<pw_slot, std::size_t> pw_latest_;
    std::map<pw_slot, std::uint64_t> pw_next_generation_;
    std::set<int> pw_streams_;
    std::size_t n_target_pairs_ = 0;
    pw_trace* pw_trace_ = nullptr;
};

} // namespace marlene
