#pragma once

#include "marlene/stream.hpp"

#include <cstdint>
#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

namespace marlene {

enum class learner_kind { hoeffding_tree, naive_bayes };

std::string to_string(learner_kind k);
learner_kind learner_kind_from_string(const std::string& s);

struct learner_config {
    learner_kind kind = learner_kind::hoeffding_tree;
    double ht_delta = 1e-7;
    std::size_t ht_grace_period = 200;
    double ht_tie_threshold = 0.05;
    double nb_variance_floor = 1e-6;
    // empty means every feature is numeric; otherwise fixes the input arity
    std::vector<feature_kind> feature_kinds;

    void validate() const;
};

// class-probability pair, neg first to mirror label value order {0,1}
struct proba {
    double neg = 0.5;
    double pos = 0.5;

    double of(int cls) const { return cls == 1 ? pos : neg; }
};

class binary_learner {
public:
    virtual ~binary_learner() = default;

    // presenting (x, y) k times at once; k = 0 is a caller bug
    virtual void train(const std::vector<double>& x, int y, std::uint64_t k) = 0;
    virtual proba predict(const std::vector<double>& x) const = 0;
    virtual std::uint64_t n_seen() const = 0;
    virtual std::unique_ptr<binary_learner> clone() const = 0;
    virtual nlohmann::json to_json() const = 0;
};

std::unique_ptr<binary_learner> make_learner(const learner_config& cfg);
std::unique_ptr<binary_learner> learner_from_json(const nlohmann::json& j);

nlohmann::json learner_config_to_json(const learner_config& cfg);
learner_config learner_config_from_json(const nlohmann::json& j);

} // namespace marlene
