#pragma once

#include "marlene/stream.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace marlene {

inline constexpr std::size_t synth_n_features = 2;
inline constexpr std::size_t synth_n_labels = 5;
inline constexpr std::size_t synth_n_components = 5;

enum class drift_kind : std::uint8_t { stable, abrupt, incremental };
enum class source_kind : std::uint8_t { similar, non_similar };

drift_kind drift_kind_from_char(char c);
std::string to_string(drift_kind k);
source_kind source_kind_from_string(const std::string& s);
std::string to_string(source_kind k);

struct gaussian_component {
    std::array<double, 2> mean{};
    std::array<double, 4> cov{1.0, 0.0, 0.0, 1.0}; // row-major 2x2
    double weight = 1.0 / synth_n_components;

    void validate() const;
};

struct drift_spec {
    std::size_t label = 0;
    drift_kind kind = drift_kind::stable;
    std::uint64_t start = 0; // abrupt: start == end == switch step
    std::uint64_t end = 0;
    std::size_t new_positive = 0;         // abrupt: component that turns positive
    std::array<double, 2> translate_to{}; // incremental: final mean position
};

// two numeric features, five labels, five-component mixture; component means
// sit on a radius-5 circle and each label's positive class is one component.
// The drift code's two letters drive labels 1 and 2; other labels stay stable.
struct synth_config {
    std::size_t per_gaussian_size = 500; // one of {50, 500, 5000}
    std::vector<source_kind> sources;
    std::string drift_code = "SS"; // one of {SS, IS, II, IA, AA, AS}
    std::uint64_t seed = 1;

    std::size_t target_length() const { return synth_n_components * per_gaussian_size; }
    std::size_t source_length() const { return synth_n_components * 5000; }
    void validate() const;
};

struct synth_streams {
    dataset target;
    std::vector<dataset> sources;
    std::vector<drift_spec> ground_truth; // entries only for drifting labels
};

synth_streams synth_generate(const synth_config& cfg);

// deterministic target geometry at a step, shared with the Bayes oracle
std::array<double, 2> target_component_mean(const synth_config& cfg, std::size_t comp,
                                            std::uint64_t step);
std::size_t positive_component(const synth_config& cfg, std::size_t label, std::uint64_t step);

// prediction of the true generative model: component posterior at x under the
// step's mixture, positive iff the label's positive component exceeds 1/2
int synth_bayes_optimal(const synth_config& cfg, const std::vector<double>& x,
                        std::uint64_t step, std::size_t label);

std::string drift_manifest(const std::vector<drift_spec>& ground_truth);
std::vector<drift_spec> parse_drift_manifest(const std::string& text);

// deterministic stand-ins for two published multi-label benchmarks whose
// files are not redistributed here: the label matrices are constructed to
// match the originals' size and imbalance statistics exactly, and features
// are label-informative noise rather than the original measurements
dataset make_yeast_replica();
dataset make_slashdot_replica();

} // namespace marlene
