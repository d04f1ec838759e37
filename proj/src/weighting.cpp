#include "marlene/weighting.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace marlene {

using nlohmann::json;

json label_indicators::to_json() const {
    return json{{"tp", tp},       {"fp", fp},       {"tn", tn}, {"fn", fn},
                {"n_pos", n_pos}, {"n_neg", n_neg}, {"sc", sc}, {"sw", sw}};
}

label_indicators label_indicators::from_json(const json& j) {
    label_indicators ind;
    ind.tp = j.at("tp").get<double>();
    ind.fp = j.at("fp").get<double>();
    ind.tn = j.at("tn").get<double>();
    ind.fn = j.at("fn").get<double>();
    ind.n_pos = j.at("n_pos").get<std::uint64_t>();
    ind.n_neg = j.at("n_neg").get<std::uint64_t>();
    ind.sc = j.at("sc").get<double>();
    ind.sw = j.at("sw").get<double>();
    return ind;
}

double poisson_rate(std::uint64_t n_pos, std::uint64_t n_neg, int y) {
    std::uint64_t own = y == 1 ? n_pos : n_neg;
    if (own == 0) return 1.0;
    return static_cast<double>(std::max(n_pos, n_neg)) / static_cast<double>(own);
}

std::pair<double, double> correction_factors(std::uint64_t n_pos, std::uint64_t n_neg) {
    if (n_pos == 0 || n_neg == 0) return {1.0, 1.0};
    double total = static_cast<double>(n_pos + n_neg);
    return {total / (2.0 * static_cast<double>(n_pos)),
            total / (2.0 * static_cast<double>(n_neg))};
}

std::pair<double, double> ppv_npv(double tp, double fp, double tn, double fn, double kappa_pos,
                                  double kappa_neg) {
    double pd = tp * kappa_pos + fp * kappa_neg;
    double nd = tn * kappa_neg + fn * kappa_pos;
    return {pd > 0.0 ? tp * kappa_pos / pd : 0.5, nd > 0.0 ? tn * kappa_neg / nd : 0.5};
}

std::pair<double, double> ppv_npv(const label_indicators& ind) {
    auto [kp, kn] = correction_factors(ind.n_pos, ind.n_neg);
    return ppv_npv(ind.tp, ind.fp, ind.tn, ind.fn, kp, kn);
}

proba calibrate(const proba& p, double ppv, double npv) {
    proba out;
    out.pos = p.pos * ppv + p.neg * (1.0 - npv);
    out.neg = p.neg * npv + p.pos * (1.0 - ppv);
    return out;
}

void update_scores(label_indicators& ind, double p_true, double lambda_sc, double lambda_sw) {
    if (!(lambda_sc > 0.0)) throw std::invalid_argument("lambda_sc must be positive");
    if (lambda_sw < 0.0) throw std::invalid_argument("lambda_sw must be non-negative");
    double ratio = lambda_sw / lambda_sc;
    ind.sc += ratio * (p_true / lambda_sc);
    if (lambda_sw > 0.0) ind.sw += ratio * ((1.0 - p_true) / lambda_sw);
}

} // namespace marlene
