#pragma once

#include "marlene/learner.hpp"

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <utility>

namespace marlene {

// per-(member, target label) bookkeeping behind the weighting scheme
struct label_indicators {
    double tp = 0.0, fp = 0.0, tn = 0.0, fn = 0.0;
    std::uint64_t n_pos = 0, n_neg = 0; // target-label class counts seen
    double sc = 0.0, sw = 0.0;          // correct / wrong prediction scores

    void reset() { *this = label_indicators{}; }
    double alpha() const { return sc + sw > 0.0 ? sc / (sc + sw) : 0.5; }

    // confusion + class-count update from a hard prediction
    void record(int y_true, int y_hard) {
        if (y_true == 1) {
            ++n_pos;
            (y_hard == 1 ? tp : fn) += 1.0;
        } else {
            ++n_neg;
            (y_hard == 1 ? fp : tn) += 1.0;
        }
    }

    bool operator==(const label_indicators&) const = default;

    nlohmann::json to_json() const;
    static label_indicators from_json(const nlohmann::json& j);
};

// resampling rate: max(n+,n-) over the count of the example's own class
double poisson_rate(std::uint64_t n_pos, std::uint64_t n_neg, int y);

// imbalance correction (kappa_pos, kappa_neg); (1,1) until both classes seen
std::pair<double, double> correction_factors(std::uint64_t n_pos, std::uint64_t n_neg);

// corrected reliability of positive/negative hard predictions
std::pair<double, double> ppv_npv(double tp, double fp, double tn, double fn, double kappa_pos,
                                  double kappa_neg);
std::pair<double, double> ppv_npv(const label_indicators& ind);

// reliability-calibrated class distribution
proba calibrate(const proba& p, double ppv, double npv);

// threshold 0.5 on the calibrated positive probability, ties to the negative class
inline int hard_label(double p_pos) { return p_pos > 0.5 ? 1 : 0; }

// difficulty-scaled score accumulation; lambda_sc must be positive
void update_scores(label_indicators& ind, double p_true, double lambda_sc, double lambda_sw);

} // namespace marlene
