#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

namespace marlene {

struct confusion_counts {
    std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }
    bool operator==(const confusion_counts&) const = default;
};

// geometric mean of the two class recalls; a class with zero support in the
// counts contributes a vacuous recall of 1 so empty-side windows do not zero
// the score
double gmean(const confusion_counts& c);

double macro_gmean(const std::vector<confusion_counts>& per_label);
double micro_gmean(const std::vector<confusion_counts>& per_label);

// gmean over one example's label slots (TP = slots where both are 1, etc.)
double ls_gmean_step(const std::vector<std::uint8_t>& y_hat, const std::vector<std::uint8_t>& y);

// fraction of label slots predicted correctly
double hamming_score_step(const std::vector<std::uint8_t>& y_hat, const std::vector<std::uint8_t>& y);

struct metric_snapshot {
    double macro_gmean = 1.0;
    double micro_gmean = 1.0;
    double ls_gmean = 1.0;
    double hscore = 1.0;
    double hloss = 0.0;
};

// sliding-window prequential scorer: admits (prediction, truth) pairs,
// evicts beyond window_len, reports metrics over the current buffer
class window_evaluator {
public:
    window_evaluator(std::size_t window_len, std::size_t n_labels);

    metric_snapshot step(const std::vector<std::uint8_t>& y_hat, const std::vector<std::uint8_t>& y);
    metric_snapshot current() const;

    std::size_t window_len() const { return window_len_; }
    std::size_t n_labels() const { return n_labels_; }
    std::size_t size() const { return buffer_.size(); }
    const std::vector<confusion_counts>& per_label() const { return per_label_; }
    double label_gmean(std::size_t q) const;

    struct entry {
        std::vector<std::uint8_t> y_hat, y;
        double ls = 0.0, hs = 0.0;
    };
    const std::deque<entry>& buffer() const { return buffer_; }

private:
    std::size_t window_len_;
    std::size_t n_labels_;
    std::deque<entry> buffer_;
    std::vector<confusion_counts> per_label_;
};

// cumulative per-label gmean with per-label resets, for drift-aligned curves
class label_gmean_tracker {
public:
    explicit label_gmean_tracker(std::size_t n_labels) : per_label_(n_labels) {}

    void step(const std::vector<std::uint8_t>& y_hat, const std::vector<std::uint8_t>& y);
    void reset(std::size_t label);

    double gmean_of(std::size_t label) const;
    double mean_gmean() const;
    const std::vector<confusion_counts>& per_label() const { return per_label_; }

private:
    std::vector<confusion_counts> per_label_;
};

std::string snapshot_csv_header(std::size_t n_labels_for_columns = 0);
std::string snapshot_csv_row(std::uint64_t step, const metric_snapshot& snap,
                             const window_evaluator* per_label_source = nullptr);

} // namespace marlene
