#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <string>

namespace marlene {

enum class drift_signal { stable, warning, drift };

std::string to_string(drift_signal s);

struct drift_config {
    double lambda_decay = 0.99;
    double warn_sigmas = 2.0;
    double drift_sigmas = 3.0;
    std::uint64_t min_observations = 30;

    void validate() const;
    bool operator==(const drift_config&) const = default;
};

nlohmann::json drift_config_to_json(const drift_config& cfg);
drift_config drift_config_from_json(const nlohmann::json& j);

// Monitors decayed minority-class recall; signals when it falls
// significantly below the best level seen since the last reset.
class drift_detector {
public:
    explicit drift_detector(drift_config cfg = {});

    drift_signal update(int y_true, int y_pred);
    void reset();

    drift_signal state() const { return state_; }
    std::uint64_t minority_observations() const { return count_; }
    int minority_class() const;
    double recall() const { return den_ > 0.0 ? num_ / den_ : 0.0; }

    bool operator==(const drift_detector&) const = default;

    nlohmann::json to_json() const;
    static drift_detector from_json(const nlohmann::json& j);

private:
    drift_config cfg_;
    double num_ = 0.0, den_ = 0.0; // decayed correct-count and weight on minority examples
    std::uint64_t count_ = 0;      // raw minority observations since reset
    double freq_pos_ = 0.0, freq_neg_ = 0.0;
    bool seen_pos_ = false, seen_neg_ = false;
    double r_best_ = 0.0, s_best_ = 0.0;
    bool has_best_ = false;
    drift_signal state_ = drift_signal::stable;
};

} // namespace marlene
