#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace marlene {

enum class feature_kind : std::uint8_t { numeric, binary };

// Stream identity: index 0 is the target stream, k >= 1 the k-th source.
struct stream_id {
    int index = 0;

    bool is_target() const { return index == 0; }
    static stream_id target() { return {0}; }
    static stream_id source(int k) {
        if (k < 1) throw std::invalid_argument("source index must be positive");
        return {k};
    }
    bool operator==(const stream_id&) const = default;
    auto operator<=>(const stream_id&) const = default;
};

struct dataset_meta {
    std::string name;
    std::size_t n_features = 0;
    std::size_t n_labels = 0;
    std::vector<feature_kind> feature_kinds; // size n_features

    void validate() const {
        if (n_features < 1 || n_labels < 1)
            throw std::invalid_argument("dataset must have at least one feature and one label");
        if (feature_kinds.size() != n_features)
            throw std::invalid_argument("feature_kinds size mismatch");
    }
};

struct instance {
    std::vector<double> x;
    std::vector<std::uint8_t> y; // each entry 0 or 1
    stream_id stream;
    std::uint64_t t = 0; // time step within its stream
};

struct dataset {
    dataset_meta meta;
    std::vector<instance> items;
};

struct parse_error : std::runtime_error {
    std::size_t line;
    parse_error(std::size_t line_, const std::string& what_)
        : std::runtime_error("line " + std::to_string(line_) + ": " + what_), line(line_) {}
};

// Multi-label ARFF, MEKA convention: the relation name carries "-C L";
// labels are the first L attributes when L > 0, the last |L| when negative.
dataset read_arff(const std::string& text, const std::string& name_hint = "");
dataset read_arff_file(const std::string& path);
std::string write_arff(const dataset& ds);

// CSV with header f1..fm,l1..lq; n_labels tells where features end.
dataset read_csv(const std::string& text, std::size_t n_labels, const std::string& name_hint = "");
dataset read_csv_file(const std::string& path, std::size_t n_labels);
std::string write_csv(const dataset& ds);

struct imbalance_stats {
    double lden = 0.0; // label density
    double lir = 0.0;  // mean per-label minority rate
    double lsir = 0.0; // mean per-instance label-set minority rate
};

imbalance_stats dataset_stats(const std::vector<instance>& data);

enum class interleave_policy { round_robin, proportional };

// Deterministic merge of one target stream and any number of source streams.
// round_robin: one example per non-exhausted stream per cycle, sources first,
// target last. proportional: streams are paced so that all of them finish
// together (long sources run ahead of a short target).
std::vector<instance> interleave(std::vector<instance> target,
                                 std::vector<std::vector<instance>> sources,
                                 interleave_policy policy = interleave_policy::round_robin,
                                 std::uint64_t seed = 0);

// Explicit schedule: consume one instance from the named stream per entry
// (index 0 = target). Entries for exhausted streams are skipped.
std::vector<instance> interleave_explicit(std::vector<instance> target,
                                          std::vector<std::vector<instance>> sources,
                                          const std::vector<int>& order);

} // namespace marlene
