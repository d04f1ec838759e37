#include "marlene/synth.hpp"

#include "marlene/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <numbers>
#include <utility>
#include <sstream>
#include <stdexcept>

namespace marlene {

namespace {

constexpr double circle_radius = 5.0;
constexpr std::uint64_t target_sample_salt = 0x74676574;
constexpr std::uint64_t source_layout_salt = 0x736c6179;
constexpr std::uint64_t source_sample_salt = 0x73736d70;

std::array<double, 2> base_mean(std::size_t comp) {
    double angle = 2.0 * std::numbers::pi * static_cast<double>(comp) /
                   static_cast<double>(synth_n_components);
    return {circle_radius * std::cos(angle), circle_radius * std::sin(angle)};
}

std::vector<drift_spec> make_specs(const synth_config& cfg) {
    std::vector<drift_spec> specs;
    const std::uint64_t len = cfg.target_length();
    for (std::size_t i = 0; i < 2; ++i) {
        std::size_t label = i + 1; // the drift code drives labels 1 and 2
        drift_kind kind = drift_kind_from_char(cfg.drift_code[i]);
        if (kind == drift_kind::stable) continue;
        drift_spec spec;
        spec.label = label;
        spec.kind = kind;
        if (kind == drift_kind::abrupt) {
            spec.start = spec.end = len / 2;
            spec.new_positive = (label + 1) % synth_n_components;
        } else {
            spec.start = 2 * len / 5; // the middle fifth of the stream
            spec.end = 3 * len / 5;
            spec.translate_to = base_mean((label + 1) % synth_n_components);
        }
        specs.push_back(spec);
    }
    return specs;
}

struct mixture_layout {
    std::array<gaussian_component, synth_n_components> components;
    std::array<std::size_t, synth_n_labels> positive; // per label
};

mixture_layout target_layout() {
    mixture_layout lay;
    for (std::size_t k = 0; k < synth_n_components; ++k) lay.components[k].mean = base_mean(k);
    for (std::size_t q = 0; q < synth_n_labels; ++q) lay.positive[q] = q;
    return lay;
}

mixture_layout source_layout(source_kind kind, rng& r) {
    mixture_layout lay = target_layout();
    if (kind == source_kind::similar) {
        for (auto& comp : lay.components) {
            comp.mean[0] += r.uniform(-0.5, 0.5);
            comp.mean[1] += r.uniform(-0.5, 0.5);
        }
        return lay;
    }
    for (auto& comp : lay.components) {
        double angle = r.uniform01() * 2.0 * std::numbers::pi;
        comp.mean = {circle_radius * std::cos(angle), circle_radius * std::sin(angle)};
    }
    for (std::size_t q = synth_n_labels - 1; q > 0; --q)
        std::swap(lay.positive[q], lay.positive[r.uniform_index(q + 1)]);
    return lay;
}

std::size_t pick_component(const std::array<gaussian_component, synth_n_components>& comps,
                           rng& r) {
    double u = r.uniform01();
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < comps.size(); ++k) {
        acc += comps[k].weight;
        if (u < acc) return k;
    }
    return comps.size() - 1;
}

std::vector<double> sample_point(const gaussian_component& comp, rng& r) {
    double a = comp.cov[0], b = comp.cov[1], c = comp.cov[3];
    double l11 = std::sqrt(a);
    double l21 = b / l11;
    double l22 = std::sqrt(c - l21 * l21);
    double z0 = r.normal(), z1 = r.normal();
    return {comp.mean[0] + l11 * z0, comp.mean[1] + l21 * z0 + l22 * z1};
}

double density(const gaussian_component& comp, const std::array<double, 2>& mean_override,
               const std::vector<double>& x) {
    double a = comp.cov[0], b = comp.cov[1], c = comp.cov[3];
    double det = a * c - b * b;
    double d0 = x[0] - mean_override[0], d1 = x[1] - mean_override[1];
    double quad = (c * d0 * d0 - 2.0 * b * d0 * d1 + a * d1 * d1) / det;
    return std::exp(-0.5 * quad) / (2.0 * std::numbers::pi * std::sqrt(det));
}

dataset_meta make_meta(std::string name) {
    dataset_meta meta;
    meta.name = std::move(name);
    meta.n_features = synth_n_features;
    meta.n_labels = synth_n_labels;
    meta.feature_kinds.assign(synth_n_features, feature_kind::numeric);
    return meta;
}

} // namespace

drift_kind drift_kind_from_char(char c) {
    switch (c) {
        case 'S': return drift_kind::stable;
        case 'A': return drift_kind::abrupt;
        case 'I': return drift_kind::incremental;
        default: throw std::invalid_argument(std::string("unknown drift letter '") + c + "'");
    }
}

std::string to_string(drift_kind k) {
    switch (k) {
        case drift_kind::stable: return "stable";
        case drift_kind::abrupt: return "abrupt";
        case drift_kind::incremental: return "incremental";
    }
    throw std::logic_error("bad drift kind");
}

source_kind source_kind_from_string(const std::string& s) {
    if (s == "similar") return source_kind::similar;
    if (s == "non_similar") return source_kind::non_similar;
    throw std::invalid_argument("unknown source kind '" + s + "'");
}

std::string to_string(source_kind k) {
    return k == source_kind::similar ? "similar" : "non_similar";
}

void gaussian_component::validate() const {
    if (!(weight > 0.0) || weight > 1.0)
        throw std::invalid_argument("component weight must be in (0,1]");
    if (cov[1] != cov[2]) throw std::invalid_argument("covariance must be symmetric");
    double det = cov[0] * cov[3] - cov[1] * cov[2];
    if (!(cov[0] > 0.0) || !(det > 0.0))
        throw std::invalid_argument("covariance must be positive definite");
}

void synth_config::validate() const {
    if (per_gaussian_size != 50 && per_gaussian_size != 500 && per_gaussian_size != 5000)
        throw std::invalid_argument("per-gaussian size must be one of 50, 500, 5000");
    static const char* valid[] = {"SS", "IS", "II", "IA", "AA", "AS"};
    bool ok = false;
    for (const char* v : valid) ok = ok || drift_code == v;
    if (!ok)
        throw std::invalid_argument("drift code '" + drift_code +
                                    "' is not one of SS, IS, II, IA, AA, AS");
}

std::size_t positive_component(const synth_config& cfg, std::size_t label, std::uint64_t step) {
    cfg.validate();
    if (label >= synth_n_labels) throw std::out_of_range("label index out of range");
    for (const drift_spec& spec : make_specs(cfg))
        if (spec.label == label && spec.kind == drift_kind::abrupt && step >= spec.start)
            return spec.new_positive;
    return label;
}

std::array<double, 2> target_component_mean(const synth_config& cfg, std::size_t comp,
                                            std::uint64_t step) {
    cfg.validate();
    if (comp >= synth_n_components) throw std::out_of_range("component index out of range");
    std::array<double, 2> m = base_mean(comp);
    for (const drift_spec& spec : make_specs(cfg)) {
        // an incremental spec moves its label's positive component, which is
        // the component with the label's index under the default map
        if (spec.kind != drift_kind::incremental || spec.label != comp) continue;
        if (step <= spec.start) return m;
        double f = step >= spec.end
                       ? 1.0
                       : static_cast<double>(step - spec.start) /
                             static_cast<double>(spec.end - spec.start);
        m[0] += f * (spec.translate_to[0] - m[0]);
        m[1] += f * (spec.translate_to[1] - m[1]);
    }
    return m;
}

synth_streams synth_generate(const synth_config& cfg) {
    cfg.validate();
    synth_streams out;
    out.ground_truth = make_specs(cfg);

    const std::string tag = cfg.drift_code + std::to_string(cfg.per_gaussian_size);
    mixture_layout lay = target_layout();
    rng tr(derive_seed(cfg.seed, target_sample_salt));
    out.target.meta = make_meta("synth_" + tag + "_target");
    out.target.items.reserve(cfg.target_length());
    for (std::uint64_t t = 0; t < cfg.target_length(); ++t) {
        std::size_t comp = pick_component(lay.components, tr);
        gaussian_component moving = lay.components[comp];
        moving.mean = target_component_mean(cfg, comp, t);
        instance ins;
        ins.x = sample_point(moving, tr);
        ins.y.resize(synth_n_labels);
        for (std::size_t q = 0; q < synth_n_labels; ++q)
            ins.y[q] = comp == positive_component(cfg, q, t) ? 1 : 0;
        ins.stream = stream_id::target();
        ins.t = t;
        out.target.items.push_back(std::move(ins));
    }

    for (std::size_t k = 0; k < cfg.sources.size(); ++k) {
        rng rl(derive_seed(cfg.seed, source_layout_salt + k));
        rng rs(derive_seed(cfg.seed, source_sample_salt + k));
        const bool similar = cfg.sources[k] == source_kind::similar;
        mixture_layout slay = source_layout(cfg.sources[k], rl);
        dataset src;
        src.meta = make_meta("synth_" + tag + "_source" + std::to_string(k + 1) + "_" +
                             to_string(cfg.sources[k]));
        src.items.reserve(cfg.source_length());
        for (std::uint64_t t = 0; t < cfg.source_length(); ++t) {
            std::size_t comp = pick_component(slay.components, rs);
            instance ins;
            if (similar) {
                // a similar source stays similar through the target's concept
                // changes: its components and label map track the target's
                // schedule at the matching stream fraction, offsets intact
                std::uint64_t t_eq = t * cfg.target_length() / cfg.source_length();
                gaussian_component moving = slay.components[comp];
                std::array<double, 2> base = base_mean(comp);
                std::array<double, 2> moved = target_component_mean(cfg, comp, t_eq);
                moving.mean[0] += moved[0] - base[0];
                moving.mean[1] += moved[1] - base[1];
                ins.x = sample_point(moving, rs);
                ins.y.resize(synth_n_labels);
                for (std::size_t q = 0; q < synth_n_labels; ++q)
                    ins.y[q] = comp == positive_component(cfg, q, t_eq) ? 1 : 0;
            } else {
                ins.x = sample_point(slay.components[comp], rs);
                ins.y.resize(synth_n_labels);
                for (std::size_t q = 0; q < synth_n_labels; ++q)
                    ins.y[q] = comp == slay.positive[q] ? 1 : 0;
            }
            ins.stream = stream_id::source(static_cast<int>(k + 1));
            ins.t = t;
            src.items.push_back(std::move(ins));
        }
        out.sources.push_back(std::move(src));
    }
    return out;
}

int synth_bayes_optimal(const synth_config& cfg, const std::vector<double>& x,
                        std::uint64_t step, std::size_t label) {
    cfg.validate();
    if (x.size() != synth_n_features)
        throw std::invalid_argument("feature vector must have two entries");
    if (label >= synth_n_labels) throw std::out_of_range("label index out of range");
    mixture_layout lay = target_layout();
    double total = 0.0, positive = 0.0;
    std::size_t pos_comp = positive_component(cfg, label, step);
    for (std::size_t k = 0; k < synth_n_components; ++k) {
        double p = lay.components[k].weight *
                   density(lay.components[k], target_component_mean(cfg, k, step), x);
        total += p;
        if (k == pos_comp) positive = p;
    }
    return total > 0.0 && positive / total > 0.5 ? 1 : 0;
}

namespace {

// bipartite greedy: place each row's ones in the columns with the largest
// remaining need; succeeds for any feasible pair of degree sequences
std::vector<std::vector<std::uint8_t>> label_matrix(std::vector<std::size_t> row_sums,
                                                    std::vector<std::size_t> col_sums,
                                                    rng& r) {
    std::sort(row_sums.begin(), row_sums.end(), std::greater<>());
    const std::size_t n_labels = col_sums.size();
    std::vector<std::size_t> need = std::move(col_sums);
    std::vector<std::vector<std::uint8_t>> rows;
    rows.reserve(row_sums.size());
    std::vector<std::size_t> order(n_labels);
    for (std::size_t m : row_sums) {
        for (std::size_t q = 0; q < n_labels; ++q) order[q] = q;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return need[a] > need[b]; });
        std::vector<std::uint8_t> row(n_labels, 0);
        for (std::size_t j = 0; j < m; ++j) {
            if (need[order[j]] == 0) throw std::logic_error("label degree sequence infeasible");
            row[order[j]] = 1;
            --need[order[j]];
        }
        rows.push_back(std::move(row));
    }
    for (std::size_t q = 0; q < n_labels; ++q)
        if (need[q] != 0) throw std::logic_error("label degree sequence infeasible");
    for (std::size_t i = rows.size() - 1; i > 0; --i)
        std::swap(rows[i], rows[r.uniform_index(i + 1)]);
    return rows;
}

std::vector<std::size_t> repeat_counts(std::initializer_list<std::pair<std::size_t, std::size_t>> spec) {
    std::vector<std::size_t> out;
    for (auto [value, times] : spec) out.insert(out.end(), times, value);
    return out;
}

} // namespace

dataset make_yeast_replica() {
    rng r(0x79656173);
    auto rows = label_matrix(repeat_counts({{8, 101}, {5, 180}, {4, 2136}}),
                             repeat_counts({{1809, 2}, {553, 10}, {552, 2}}), r);
    dataset ds;
    ds.meta.name = "yeast_replica";
    ds.meta.n_features = 103;
    ds.meta.n_labels = 14;
    ds.meta.feature_kinds.assign(103, feature_kind::numeric);
    ds.items.reserve(rows.size());
    // feature j carries a noisy signed indicator of label j mod 14
    const double pull = 0.09;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        instance ins;
        ins.y = std::move(rows[i]);
        ins.x.resize(103);
        for (std::size_t j = 0; j < 103; ++j)
            ins.x[j] = pull * (ins.y[j % 14] ? 1.0 : -1.0) + r.normal();
        ins.stream = stream_id::target();
        ins.t = i;
        ds.items.push_back(std::move(ins));
    }
    return ds;
}

dataset make_slashdot_replica() {
    rng r(0x736c6173);
    auto rows = label_matrix(repeat_counts({{2, 711}, {1, 3071}}),
                             repeat_counts({{205, 5}, {204, 17}}), r);
    dataset ds;
    ds.meta.name = "slashdot_replica";
    ds.meta.n_features = 1079;
    ds.meta.n_labels = 22;
    ds.meta.feature_kinds.assign(1079, feature_kind::binary);
    ds.items.reserve(rows.size());
    // sparse binary features, enriched when their home label is on
    for (std::size_t i = 0; i < rows.size(); ++i) {
        instance ins;
        ins.y = std::move(rows[i]);
        ins.x.resize(1079);
        for (std::size_t j = 0; j < 1079; ++j) {
            double rate = ins.y[j % 22] ? 0.2 : 0.02;
            ins.x[j] = r.uniform01() < rate ? 1.0 : 0.0;
        }
        ins.stream = stream_id::target();
        ins.t = i;
        ds.items.push_back(std::move(ins));
    }
    return ds;
}

std::string drift_manifest(const std::vector<drift_spec>& ground_truth) {
    std::string out = "label,kind,start,end\n";
    for (const drift_spec& spec : ground_truth)
        out += std::to_string(spec.label) + "," + to_string(spec.kind) + "," +
               std::to_string(spec.start) + "," + std::to_string(spec.end) + "\n";
    return out;
}

std::vector<drift_spec> parse_drift_manifest(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "label,kind,start,end")
        throw std::invalid_argument("drift manifest must start with its header row");
    std::vector<drift_spec> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string label_s, kind_s, start_s, end_s;
        if (!std::getline(row, label_s, ',') || !std::getline(row, kind_s, ',') ||
            !std::getline(row, start_s, ',') || !std::getline(row, end_s))
            throw std::invalid_argument("drift manifest line " + std::to_string(line_no) +
                                        " is malformed");
        drift_spec spec;
        spec.label = std::stoul(label_s);
        if (kind_s == "abrupt") spec.kind = drift_kind::abrupt;
        else if (kind_s == "incremental") spec.kind = drift_kind::incremental;
        else
            throw std::invalid_argument("drift manifest line " + std::to_string(line_no) +
                                        " has unknown kind '" + kind_s + "'");
        spec.start = std::stoull(start_s);
        spec.end = std::stoull(end_s);
        out.push_back(spec);
    }
    return out;
}

} // namespace marlene
