#include "marlene/learner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace marlene {

using nlohmann::json;

std::string to_string(learner_kind k) {
    return k == learner_kind::hoeffding_tree ? "hoeffding_tree" : "naive_bayes";
}

learner_kind learner_kind_from_string(const std::string& s) {
    if (s == "hoeffding_tree" || s == "ht") return learner_kind::hoeffding_tree;
    if (s == "naive_bayes" || s == "nb") return learner_kind::naive_bayes;
    throw std::invalid_argument("unknown learner kind '" + s + "'");
}

void learner_config::validate() const {
    if (!(ht_delta > 0.0 && ht_delta < 1.0))
        throw std::invalid_argument("ht_delta must lie in (0,1)");
    if (ht_grace_period < 1) throw std::invalid_argument("ht_grace_period must be positive");
    if (ht_tie_threshold < 0.0) throw std::invalid_argument("ht_tie_threshold must be >= 0");
    if (!(nb_variance_floor > 0.0))
        throw std::invalid_argument("nb_variance_floor must be positive");
}

namespace {

constexpr double pi_v = 3.14159265358979323846;

double gauss_log_pdf(double x, double mean, double var) {
    double d = x - mean;
    return -0.5 * std::log(2.0 * pi_v * var) - d * d / (2.0 * var);
}

double gauss_cdf(double x, double mean, double stddev) {
    return 0.5 * std::erfc((mean - x) / (stddev * std::sqrt(2.0)));
}

double entropy2(double w0, double w1) {
    double w = w0 + w1;
    if (w <= 0.0) return 0.0;
    double h = 0.0;
    for (double c : {w0, w1}) {
        if (c <= 0.0) continue;
        double p = c / w;
        h -= p * std::log2(p);
    }
    return h;
}

std::vector<feature_kind> kinds_from_json(const json& j) {
    std::vector<feature_kind> kinds;
    for (int v : j.get<std::vector<int>>())
        kinds.push_back(v ? feature_kind::binary : feature_kind::numeric);
    return kinds;
}

json kinds_to_json(const std::vector<feature_kind>& kinds) {
    std::vector<int> v;
    v.reserve(kinds.size());
    for (auto k : kinds) v.push_back(k == feature_kind::binary ? 1 : 0);
    return v;
}

// per-class, per-feature sufficient statistics shared by both learners
struct feature_stats {
    std::vector<double> sum, sumsq; // indexed [cls * n_features + j]
    std::array<double, 2> cls_w{0.0, 0.0};

    void init(std::size_t n_features) {
        sum.assign(2 * n_features, 0.0);
        sumsq.assign(2 * n_features, 0.0);
        cls_w = {0.0, 0.0};
    }
    void add(const std::vector<double>& x, int y, double w) {
        std::size_t base = static_cast<std::size_t>(y) * x.size();
        for (std::size_t j = 0; j < x.size(); ++j) {
            sum[base + j] += w * x[j];
            sumsq[base + j] += w * x[j] * x[j];
        }
        cls_w[static_cast<std::size_t>(y)] += w;
    }
    double mean(int y, std::size_t j, std::size_t n_features) const {
        double w = cls_w[static_cast<std::size_t>(y)];
        return w > 0.0 ? sum[static_cast<std::size_t>(y) * n_features + j] / w : 0.0;
    }
    double var(int y, std::size_t j, std::size_t n_features, double floor) const {
        double w = cls_w[static_cast<std::size_t>(y)];
        if (w <= 0.0) return floor;
        double m = mean(y, j, n_features);
        double v = sumsq[static_cast<std::size_t>(y) * n_features + j] / w - m * m;
        return std::max(v, floor);
    }
    json to_json() const {
        return json{{"sum", sum}, {"sumsq", sumsq}, {"cls_w", cls_w}};
    }
    static feature_stats from_json(const json& j) {
        feature_stats st;
        st.sum = j.at("sum").get<std::vector<double>>();
        st.sumsq = j.at("sumsq").get<std::vector<double>>();
        auto w = j.at("cls_w").get<std::vector<double>>();
        st.cls_w = {w.at(0), w.at(1)};
        return st;
    }
};

class naive_bayes final : public binary_learner {
public:
    explicit naive_bayes(const learner_config& cfg) : cfg_(cfg) {
        cfg_.validate();
        if (!cfg_.feature_kinds.empty()) resolve_arity(cfg_.feature_kinds.size());
    }

    void train(const std::vector<double>& x, int y, std::uint64_t k) override {
        if (k == 0) throw std::invalid_argument("training weight k must be positive");
        if (y != 0 && y != 1) throw std::invalid_argument("class must be 0 or 1");
        if (n_features_ == 0) resolve_arity(x.size());
        check_arity(x.size());
        stats_.add(x, y, static_cast<double>(k));
        n_seen_ += k;
    }

    proba predict(const std::vector<double>& x) const override {
        check_arity(x.size());
        double total = stats_.cls_w[0] + stats_.cls_w[1];
        double log_score[2];
        for (int c = 0; c < 2; ++c)
            log_score[c] = std::log((stats_.cls_w[static_cast<std::size_t>(c)] + 1.0) / (total + 2.0));
        if (n_features_ > 0 && total > 0.0) {
            for (std::size_t j = 0; j < x.size(); ++j) {
                if (kind(j) == feature_kind::binary) {
                    for (int c = 0; c < 2; ++c) {
                        double w = stats_.cls_w[static_cast<std::size_t>(c)];
                        double ones = stats_.sum[static_cast<std::size_t>(c) * n_features_ + j];
                        double p1 = (ones + 1.0) / (w + 2.0);
                        log_score[c] += std::log(x[j] == 0.0 ? 1.0 - p1 : p1);
                    }
                } else {
                    // a class without data borrows the pooled estimate
                    double pm, pv;
                    pooled(j, pm, pv);
                    for (int c = 0; c < 2; ++c) {
                        double w = stats_.cls_w[static_cast<std::size_t>(c)];
                        double m = w > 0.0 ? stats_.mean(c, j, n_features_) : pm;
                        double v = w > 0.0 ? stats_.var(c, j, n_features_, cfg_.nb_variance_floor)
                                           : pv;
                        log_score[c] += gauss_log_pdf(x[j], m, v);
                    }
                }
            }
        }
        double mx = std::max(log_score[0], log_score[1]);
        double e0 = std::exp(log_score[0] - mx), e1 = std::exp(log_score[1] - mx);
        return {e0 / (e0 + e1), e1 / (e0 + e1)};
    }

    std::uint64_t n_seen() const override { return n_seen_; }

    std::unique_ptr<binary_learner> clone() const override {
        return std::make_unique<naive_bayes>(*this);
    }

    json to_json() const override {
        return json{{"kind", "naive_bayes"},
                    {"variance_floor", cfg_.nb_variance_floor},
                    {"kinds", kinds_to_json(cfg_.feature_kinds)},
                    {"n_features", n_features_},
                    {"n_seen", n_seen_},
                    {"stats", stats_.to_json()}};
    }

    static std::unique_ptr<binary_learner> from_json(const json& j) {
        learner_config cfg;
        cfg.kind = learner_kind::naive_bayes;
        cfg.nb_variance_floor = j.at("variance_floor").get<double>();
        cfg.feature_kinds = kinds_from_json(j.at("kinds"));
        auto nb = std::make_unique<naive_bayes>(cfg);
        nb->n_features_ = j.at("n_features").get<std::size_t>();
        nb->n_seen_ = j.at("n_seen").get<std::uint64_t>();
        if (nb->n_features_ > 0) nb->stats_ = feature_stats::from_json(j.at("stats"));
        return nb;
    }

private:
    feature_kind kind(std::size_t j) const {
        return cfg_.feature_kinds.empty() ? feature_kind::numeric : cfg_.feature_kinds[j];
    }
    void pooled(std::size_t j, double& mean, double& var) const {
        double w = stats_.cls_w[0] + stats_.cls_w[1];
        double s = stats_.sum[j] + stats_.sum[n_features_ + j];
        double ss = stats_.sumsq[j] + stats_.sumsq[n_features_ + j];
        if (w <= 0.0) {
            mean = 0.0;
            var = cfg_.nb_variance_floor;
            return;
        }
        mean = s / w;
        var = std::max(ss / w - mean * mean, cfg_.nb_variance_floor);
    }
    void resolve_arity(std::size_t n) {
        n_features_ = n;
        stats_.init(n);
        if (!cfg_.feature_kinds.empty() && cfg_.feature_kinds.size() != n)
            throw std::invalid_argument("input arity disagrees with declared feature kinds");
    }
    void check_arity(std::size_t n) const {
        if (n_features_ != 0 && n != n_features_)
            throw std::invalid_argument("input arity " + std::to_string(n) +
                                        " does not match model arity " +
                                        std::to_string(n_features_));
    }

    learner_config cfg_;
    std::size_t n_features_ = 0;
    std::uint64_t n_seen_ = 0;
    feature_stats stats_;
};

class hoeffding_tree final : public binary_learner {
    struct node {
        feature_stats stats;
        std::array<double, 2> cls_w{0.0, 0.0}; // observed class weights at this node
        double weight_at_last_check = 0.0;
        int split_feature = -1;
        double split_threshold = 0.0; // numeric: x <= thr goes left; binary: x == 0 goes left
        int left = -1, right = -1;

        bool is_leaf() const { return split_feature < 0; }
        double total_w() const { return cls_w[0] + cls_w[1]; }
    };

public:
    explicit hoeffding_tree(const learner_config& cfg) : cfg_(cfg) {
        cfg_.validate();
        nodes_.push_back(node{});
        if (!cfg_.feature_kinds.empty()) resolve_arity(cfg_.feature_kinds.size());
    }

    void train(const std::vector<double>& x, int y, std::uint64_t k) override {
        if (k == 0) throw std::invalid_argument("training weight k must be positive");
        if (y != 0 && y != 1) throw std::invalid_argument("class must be 0 or 1");
        if (n_features_ == 0) resolve_arity(x.size());
        check_arity(x.size());
        double w = static_cast<double>(k);
        int idx = descend(x);
        node& leaf = nodes_[static_cast<std::size_t>(idx)];
        leaf.stats.add(x, y, w);
        leaf.cls_w[static_cast<std::size_t>(y)] += w;
        n_seen_ += k;
        if (leaf.total_w() - leaf.weight_at_last_check >=
            static_cast<double>(cfg_.ht_grace_period))
            try_split(idx);
    }

    proba predict(const std::vector<double>& x) const override {
        check_arity(x.size());
        if (n_features_ == 0) return {0.5, 0.5};
        const node& leaf = nodes_[static_cast<std::size_t>(descend(x))];
        double w = leaf.total_w();
        double p1 = (leaf.cls_w[1] + 1.0) / (w + 2.0);
        return {1.0 - p1, p1};
    }

    std::uint64_t n_seen() const override { return n_seen_; }

    std::unique_ptr<binary_learner> clone() const override {
        return std::make_unique<hoeffding_tree>(*this);
    }

    json to_json() const override {
        json narr = json::array();
        for (const auto& nd : nodes_) {
            narr.push_back(json{{"stats", nd.stats.to_json()},
                                {"cls_w", nd.cls_w},
                                {"checked", nd.weight_at_last_check},
                                {"feat", nd.split_feature},
                                {"thr", nd.split_threshold},
                                {"left", nd.left},
                                {"right", nd.right}});
        }
        return json{{"kind", "hoeffding_tree"},
                    {"delta", cfg_.ht_delta},
                    {"grace", cfg_.ht_grace_period},
                    {"tie", cfg_.ht_tie_threshold},
                    {"kinds", kinds_to_json(cfg_.feature_kinds)},
                    {"n_features", n_features_},
                    {"n_seen", n_seen_},
                    {"nodes", narr}};
    }

    static std::unique_ptr<binary_learner> from_json(const json& j) {
        learner_config cfg;
        cfg.kind = learner_kind::hoeffding_tree;
        cfg.ht_delta = j.at("delta").get<double>();
        cfg.ht_grace_period = j.at("grace").get<std::size_t>();
        cfg.ht_tie_threshold = j.at("tie").get<double>();
        cfg.feature_kinds = kinds_from_json(j.at("kinds"));
        auto ht = std::make_unique<hoeffding_tree>(cfg);
        ht->n_features_ = j.at("n_features").get<std::size_t>();
        ht->n_seen_ = j.at("n_seen").get<std::uint64_t>();
        ht->nodes_.clear();
        for (const auto& nj : j.at("nodes")) {
            node nd;
            nd.stats = feature_stats::from_json(nj.at("stats"));
            auto w = nj.at("cls_w").get<std::vector<double>>();
            nd.cls_w = {w.at(0), w.at(1)};
            nd.weight_at_last_check = nj.at("checked").get<double>();
            nd.split_feature = nj.at("feat").get<int>();
            nd.split_threshold = nj.at("thr").get<double>();
            nd.left = nj.at("left").get<int>();
            nd.right = nj.at("right").get<int>();
            ht->nodes_.push_back(std::move(nd));
        }
        if (ht->nodes_.empty()) ht->nodes_.push_back(node{});
        return ht;
    }

    std::size_t n_nodes() const { return nodes_.size(); }

private:
    feature_kind kind(std::size_t j) const {
        return cfg_.feature_kinds.empty() ? feature_kind::numeric : cfg_.feature_kinds[j];
    }
    void resolve_arity(std::size_t n) {
        n_features_ = n;
        nodes_[0].stats.init(n);
        if (!cfg_.feature_kinds.empty() && cfg_.feature_kinds.size() != n)
            throw std::invalid_argument("input arity disagrees with declared feature kinds");
    }
    void check_arity(std::size_t n) const {
        if (n_features_ != 0 && n != n_features_)
            throw std::invalid_argument("input arity " + std::to_string(n) +
                                        " does not match model arity " +
                                        std::to_string(n_features_));
    }

    int descend(const std::vector<double>& x) const {
        int idx = 0;
        while (!nodes_[static_cast<std::size_t>(idx)].is_leaf()) {
            const node& nd = nodes_[static_cast<std::size_t>(idx)];
            std::size_t f = static_cast<std::size_t>(nd.split_feature);
            bool go_left = kind(f) == feature_kind::binary ? x[f] == 0.0
                                                           : x[f] <= nd.split_threshold;
            idx = go_left ? nd.left : nd.right;
        }
        return idx;
    }

    struct candidate {
        double gain = -1.0;
        std::size_t feature = 0;
        double threshold = 0.0;
        std::array<double, 2> left_w{0.0, 0.0}, right_w{0.0, 0.0};
    };

    // split children estimated from per-class Gaussians (numeric) or one-counts (binary)
    candidate best_for_feature(const node& leaf, std::size_t j) const {
        candidate best;
        best.feature = j;
        double base = entropy2(leaf.cls_w[0], leaf.cls_w[1]);
        double total = leaf.total_w();
        if (kind(j) == feature_kind::binary) {
            std::array<double, 2> ones{}, zeros{};
            for (int c = 0; c < 2; ++c) {
                ones[static_cast<std::size_t>(c)] = leaf.stats.sum[static_cast<std::size_t>(c) * n_features_ + j];
                zeros[static_cast<std::size_t>(c)] =
                    leaf.cls_w[static_cast<std::size_t>(c)] - ones[static_cast<std::size_t>(c)];
            }
            double wl = zeros[0] + zeros[1], wr = ones[0] + ones[1];
            if (wl <= 0.0 || wr <= 0.0) return best;
            double gain = base - (wl / total) * entropy2(zeros[0], zeros[1]) -
                          (wr / total) * entropy2(ones[0], ones[1]);
            best.gain = gain;
            best.threshold = 0.5;
            best.left_w = zeros;
            best.right_w = ones;
            return best;
        }
        double m[2], v[2], w[2];
        for (int c = 0; c < 2; ++c) {
            w[c] = leaf.cls_w[static_cast<std::size_t>(c)];
            m[c] = leaf.stats.mean(c, j, n_features_);
            v[c] = leaf.stats.var(c, j, n_features_, 1e-6);
        }
        for (double t : mixture_quantiles(m, v, w)) {
            std::array<double, 2> lw{}, rw{};
            for (int c = 0; c < 2; ++c) {
                double frac = w[c] > 0.0 ? gauss_cdf(t, m[c], std::sqrt(v[c])) : 0.0;
                lw[static_cast<std::size_t>(c)] = w[c] * frac;
                rw[static_cast<std::size_t>(c)] = w[c] - lw[static_cast<std::size_t>(c)];
            }
            double wl = lw[0] + lw[1], wr = rw[0] + rw[1];
            if (wl < 1e-9 || wr < 1e-9) continue;
            double gain = base - (wl / total) * entropy2(lw[0], lw[1]) -
                          (wr / total) * entropy2(rw[0], rw[1]);
            if (gain > best.gain) {
                best.gain = gain;
                best.threshold = t;
                best.left_w = lw;
                best.right_w = rw;
            }
        }
        return best;
    }

    std::vector<double> mixture_quantiles(const double m[2], const double v[2],
                                          const double w[2]) const {
        double total = w[0] + w[1];
        double lo = 1e300, hi = -1e300;
        for (int c = 0; c < 2; ++c) {
            if (w[c] <= 0.0) continue;
            double s = std::sqrt(v[c]);
            lo = std::min(lo, m[c] - 6.0 * s);
            hi = std::max(hi, m[c] + 6.0 * s);
        }
        std::vector<double> out;
        if (!(lo < hi)) return out;
        auto cdf = [&](double t) {
            double acc = 0.0;
            for (int c = 0; c < 2; ++c)
                if (w[c] > 0.0) acc += w[c] * gauss_cdf(t, m[c], std::sqrt(v[c]));
            return acc / total;
        };
        for (int i = 1; i <= 10; ++i) {
            double p = static_cast<double>(i) / 11.0;
            double a = lo, b = hi;
            for (int it = 0; it < 40; ++it) {
                double mid = 0.5 * (a + b);
                (cdf(mid) < p ? a : b) = mid;
            }
            out.push_back(0.5 * (a + b));
        }
        return out;
    }

    void try_split(int idx) {
        node& leaf = nodes_[static_cast<std::size_t>(idx)];
        leaf.weight_at_last_check = leaf.total_w();
        if (leaf.cls_w[0] <= 0.0 || leaf.cls_w[1] <= 0.0) return;
        candidate best, second;
        for (std::size_t j = 0; j < n_features_; ++j) {
            candidate c = best_for_feature(leaf, j);
            if (c.gain > best.gain) {
                second = best;
                best = c;
            } else if (c.gain > second.gain) {
                second = c;
            }
        }
        if (best.gain <= 0.0) return;
        double n = leaf.total_w();
        double eps = std::sqrt(std::log(1.0 / cfg_.ht_delta) / (2.0 * n));
        double second_gain = second.gain > 0.0 ? second.gain : 0.0;
        if (best.gain - second_gain > eps || eps < cfg_.ht_tie_threshold) {
            node l, r;
            l.stats.init(n_features_);
            r.stats.init(n_features_);
            l.cls_w = best.left_w;
            r.cls_w = best.right_w;
            l.weight_at_last_check = l.total_w();
            r.weight_at_last_check = r.total_w();
            int li = static_cast<int>(nodes_.size());
            nodes_.push_back(std::move(l));
            nodes_.push_back(std::move(r));
            node& p = nodes_[static_cast<std::size_t>(idx)];
            p.split_feature = static_cast<int>(best.feature);
            p.split_threshold = best.threshold;
            p.left = li;
            p.right = li + 1;
        }
    }

    learner_config cfg_;
    std::size_t n_features_ = 0;
    std::uint64_t n_seen_ = 0;
    std::vector<node> nodes_;
};

} // namespace

std::unique_ptr<binary_learner> make_learner(const learner_config& cfg) {
    cfg.validate();
    if (cfg.kind == learner_kind::naive_bayes) return std::make_unique<naive_bayes>(cfg);
    return std::make_unique<hoeffding_tree>(cfg);
}

std::unique_ptr<binary_learner> learner_from_json(const json& j) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "naive_bayes") return naive_bayes::from_json(j);
    if (kind == "hoeffding_tree") return hoeffding_tree::from_json(j);
    throw std::invalid_argument("unknown learner kind '" + kind + "' in checkpoint");
}

json learner_config_to_json(const learner_config& cfg) {
    return json{{"kind", to_string(cfg.kind)},
                {"ht_delta", cfg.ht_delta},
                {"ht_grace_period", cfg.ht_grace_period},
                {"ht_tie_threshold", cfg.ht_tie_threshold},
                {"nb_variance_floor", cfg.nb_variance_floor},
                {"feature_kinds", kinds_to_json(cfg.feature_kinds)}};
}

learner_config learner_config_from_json(const json& j) {
    learner_config cfg;
    cfg.kind = learner_kind_from_string(j.at("kind").get<std::string>());
    cfg.ht_delta = j.at("ht_delta").get<double>();
    cfg.ht_grace_period = j.at("ht_grace_period").get<std::uint64_t>();
    cfg.ht_tie_threshold = j.at("ht_tie_threshold").get<double>();
    cfg.nb_variance_floor = j.at("nb_variance_floor").get<double>();
    cfg.feature_kinds = kinds_from_json(j.at("feature_kinds"));
    cfg.validate();
    return cfg;
}

} // namespace marlene
