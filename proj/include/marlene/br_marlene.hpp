#pragma once

#include "marlene/drift.hpp"
#include "marlene/learner.hpp"
#include "marlene/rng.hpp"
#include "marlene/stream.hpp"
#include "marlene/weighting.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <utility>
#include <vector>

namespace marlene {

struct br_config {
    learner_config base;
    drift_config drift;
    std::uint64_t seed = 1;
    // 0 = unlimited; otherwise a drift spawn past the cap recycles the oldest
    // member of that (stream,label) slot in place
    std::size_t max_members_per_slot = 0;

    void validate() const;
};

// which (stream,label) lineage a member belongs to, and how many concepts
// preceded it there
struct member_origin {
    stream_id stream;
    std::size_t label = 0;
    std::uint64_t generation = 0;

    bool operator==(const member_origin&) const = default;
};

struct sub_classifier {
    std::unique_ptr<binary_learner> model;
    member_origin origin;
    std::vector<label_indicators> per_target_label; // sized once target registered
    std::uint64_t train_n_pos = 0, train_n_neg = 0; // own training class counts
};

struct observe_report {
    std::vector<std::pair<std::size_t, drift_signal>> signals; // non-stable (label, signal)
    std::vector<std::size_t> spawned;                          // member indices created
    std::vector<std::size_t> reset_labels;                     // target labels reset on drift
};

// Optional per-event instrumentation: member lifecycle plus every member's
// raw (uncalibrated) prediction captured before this event's training. This
// is exactly what an external replay of the weighting arithmetic needs,
// since model state after stochastic resampling is not reproducible from
// the event sequence alone.
struct br_event_trace {
    bool is_target = false;
    std::vector<std::pair<std::size_t, member_origin>> spawns;
    std::vector<std::size_t> resets;
    std::vector<proba> raw; // per member; filled for target events only
};

struct br_trace {
    std::vector<br_event_trace> events;
};

struct br_prediction {
    std::vector<double> score_neg, score_pos; // per target label
    std::vector<std::uint8_t> y_hat;
};

// Online binary-relevance ensemble over one target stream and any number of
// source streams. Every member, wherever it was spawned, carries calibrated
// reliability indicators and a difficulty-scaled weight for every target
// label, so knowledge transfers across labels and streams.
class br_ensemble {
public:
    explicit br_ensemble(br_config cfg = {});

    // processes one stream event: per-label drift checks and spawns, then
    // imbalance-aware training of the latest members, then (target events
    // only) indicator and weight updates for every member and target label
    observe_report observe(const instance& ev);

    // per-label weighted vote; pure
    br_prediction predict(const std::vector<double>& x) const;

    // mean over target labels of the weight fraction held by members not
    // trained on that label; labels with zero total weight contribute 0.5
    double aswr() const;

    // calibrated class distribution of member m for target label q at x
    proba calibrated(std::size_t m, std::size_t q, const std::vector<double>& x) const;

    const br_config& config() const { return cfg_; }
    const std::vector<sub_classifier>& members() const { return members_; }
    bool target_registered() const { return n_target_labels_ > 0; }
    std::size_t n_target_labels() const { return n_target_labels_; }
    std::size_t n_features() const { return n_features_; }

    void set_trace(br_trace* sink) { trace_ = sink; }

    nlohmann::json to_json() const;
    static br_ensemble from_json(const nlohmann::json& j);

private:
    using slot = std::pair<int, std::size_t>; // (stream index, label)

    void validate_event(const instance& ev) const;
    void register_stream(const instance& ev, observe_report& rep);
    std::size_t spawn(stream_id s, std::size_t label, observe_report& rep);

    br_config cfg_;
    rng rng_;
    std::vector<sub_classifier> members_;
    std::map<slot, drift_detector> detectors_;
    std::map<slot, std::size_t> latest_;
    std::map<slot, std::uint64_t> next_generation_;
    std::map<int, std::size_t> stream_arity_;
    std::size_t n_features_ = 0;
    std::size_t n_target_labels_ = 0;
    br_trace* trace_ = nullptr;
};

// (lambda_SC, lambda_SW) of the current ensemble for (x, y_true) on target
// label q; their sum is the member count
std::pair<double, double> example_difficulty(const br_ensemble& ens, const std::vector<double>& x,
                                             int y_true, std::size_t q);

} // namespace marlene
