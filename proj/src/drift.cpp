#include "marlene/drift.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace marlene {

using nlohmann::json;

std::string to_string(drift_signal s) {
    switch (s) {
    case drift_signal::warning: return "warning";
    case drift_signal::drift: return "drift";
    default: return "stable";
    }
}

void drift_config::validate() const {
    if (!(lambda_decay > 0.0 && lambda_decay < 1.0))
        throw std::invalid_argument("lambda_decay must lie in (0,1)");
    if (!(warn_sigmas > 0.0) || !(drift_sigmas > warn_sigmas))
        throw std::invalid_argument("need 0 < warn_sigmas < drift_sigmas");
    if (min_observations < 1) throw std::invalid_argument("min_observations must be positive");
}

drift_detector::drift_detector(drift_config cfg) : cfg_(cfg) { cfg_.validate(); }

int drift_detector::minority_class() const {
    if (!seen_pos_ || !seen_neg_) return 1;
    return freq_neg_ < freq_pos_ ? 0 : 1; // ties go to the positive class
}

void drift_detector::reset() {
    num_ = den_ = 0.0;
    count_ = 0;
    freq_pos_ = freq_neg_ = 0.0;
    seen_pos_ = seen_neg_ = false;
    r_best_ = s_best_ = 0.0;
    has_best_ = false;
    state_ = drift_signal::stable;
}

drift_signal drift_detector::update(int y_true, int y_pred) {
    const double lam = cfg_.lambda_decay;
    const int minority = minority_class();

    freq_pos_ = lam * freq_pos_ + (1.0 - lam) * (y_true == 1 ? 1.0 : 0.0);
    freq_neg_ = lam * freq_neg_ + (1.0 - lam) * (y_true == 0 ? 1.0 : 0.0);
    seen_pos_ = seen_pos_ || y_true == 1;
    seen_neg_ = seen_neg_ || y_true == 0;

    if (y_true != minority) return state_;

    num_ = lam * num_ + (1.0 - lam) * (y_pred == y_true ? 1.0 : 0.0);
    den_ = lam * den_ + (1.0 - lam);
    ++count_;
    if (count_ < cfg_.min_observations) {
        state_ = drift_signal::stable;
        return state_;
    }

    double r = num_ / den_;
    // cap the effective count far below the decayed estimate's nominal sample
    // size so the drift band clears its stationary excursion range; the floor
    // on r(1-r) keeps the band open after perfect runs and r+s monotone in r
    double cap = std::ceil(0.12 * (1.0 + lam) / (1.0 - lam));
    double n_eff = std::min(static_cast<double>(count_), std::max(1.0, cap));
    double s = std::sqrt(std::max(r * (1.0 - r), 0.25 / n_eff) / n_eff);

    if (!has_best_ || r + s >= r_best_ + s_best_) {
        r_best_ = r;
        s_best_ = s;
        has_best_ = true;
    }

    if (r + s < r_best_ - cfg_.drift_sigmas * s_best_) {
        reset();
        return drift_signal::drift;
    }
    state_ = r + s < r_best_ - cfg_.warn_sigmas * s_best_ ? drift_signal::warning
                                                          : drift_signal::stable;
    return state_;
}

json drift_detector::to_json() const {
    return json{{"lambda", cfg_.lambda_decay},
                {"warn_sigmas", cfg_.warn_sigmas},
                {"drift_sigmas", cfg_.drift_sigmas},
                {"min_obs", cfg_.min_observations},
                {"num", num_},
                {"den", den_},
                {"count", count_},
                {"freq_pos", freq_pos_},
                {"freq_neg", freq_neg_},
                {"seen_pos", seen_pos_},
                {"seen_neg", seen_neg_},
                {"r_best", r_best_},
                {"s_best", s_best_},
                {"has_best", has_best_},
                {"state", static_cast<int>(state_)}};
}

json drift_config_to_json(const drift_config& cfg) {
    return json{{"lambda", cfg.lambda_decay},
                {"warn_sigmas", cfg.warn_sigmas},
                {"drift_sigmas", cfg.drift_sigmas},
                {"min_obs", cfg.min_observations}};
}

drift_config drift_config_from_json(const json& j) {
    drift_config cfg;
    cfg.lambda_decay = j.at("lambda").get<double>();
    cfg.warn_sigmas = j.at("warn_sigmas").get<double>();
    cfg.drift_sigmas = j.at("drift_sigmas").get<double>();
    cfg.min_observations = j.at("min_obs").get<std::uint64_t>();
    cfg.validate();
    return cfg;
}

drift_detector drift_detector::from_json(const json& j) {
    drift_config cfg = drift_config_from_json(j);
    drift_detector d(cfg);
    d.num_ = j.at("num").get<double>();
    d.den_ = j.at("den").get<double>();
    d.count_ = j.at("count").get<std::uint64_t>();
    d.freq_pos_ = j.at("freq_pos").get<double>();
    d.freq_neg_ = j.at("freq_neg").get<double>();
    d.seen_pos_ = j.at("seen_pos").get<bool>();
    d.seen_neg_ = j.at("seen_neg").get<bool>();
    d.r_best_ = j.at("r_best").get<double>();
    d.s_best_ = j.at("s_best").get<double>();
    d.has_best_ = j.at("has_best").get<bool>();
    d.state_ = static_cast<drift_signal>(j.at("state").get<int>());
    return d;
}

} // namespace marlene
