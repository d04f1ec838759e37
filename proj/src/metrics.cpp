#include "marlene/metrics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace marlene {

namespace {

double recall_or_vacuous(std::uint64_t hit, std::uint64_t miss) {
    std::uint64_t support = hit + miss;
    if (support == 0) return 1.0;
    return static_cast<double>(hit) / static_cast<double>(support);
}

confusion_counts slot_counts(const std::vector<std::uint8_t>& y_hat,
                             const std::vector<std::uint8_t>& y) {
    if (y_hat.size() != y.size())
        throw std::invalid_argument("prediction and truth must have the same label arity");
    if (y.empty()) throw std::invalid_argument("label vectors must be non-empty");
    confusion_counts c;
    for (std::size_t q = 0; q < y.size(); ++q) {
        if (y[q]) {
            if (y_hat[q]) ++c.tp;
            else ++c.fn;
        } else {
            if (y_hat[q]) ++c.fp;
            else ++c.tn;
        }
    }
    return c;
}

} // namespace

double gmean(const confusion_counts& c) {
    double pos = recall_or_vacuous(c.tp, c.fn);
    double neg = recall_or_vacuous(c.tn, c.fp);
    return std::sqrt(pos * neg);
}

double macro_gmean(const std::vector<confusion_counts>& per_label) {
    if (per_label.empty()) throw std::invalid_argument("macro gmean needs at least one label");
    double sum = 0.0;
    for (const auto& c : per_label) sum += gmean(c);
    return sum / static_cast<double>(per_label.size());
}

double micro_gmean(const std::vector<confusion_counts>& per_label) {
    if (per_label.empty()) throw std::invalid_argument("micro gmean needs at least one label");
    confusion_counts pooled;
    for (const auto& c : per_label) {
        pooled.tp += c.tp;
        pooled.fp += c.fp;
        pooled.tn += c.tn;
        pooled.fn += c.fn;
    }
    return gmean(pooled);
}

double ls_gmean_step(const std::vector<std::uint8_t>& y_hat, const std::vector<std::uint8_t>& y) {
    return gmean(slot_counts(y_hat, y));
}

double hamming_score_step(const std::vector<std::uint8_t>& y_hat,
                          const std::vector<std::uint8_t>& y) {
    if (y_hat.size() != y.size())
        throw std::invalid_argument("prediction and truth must have the same label arity");
    if (y.empty()) throw std::invalid_argument("label vectors must be non-empty");
    std::size_t hits = 0;
    for (std::size_t q = 0; q < y.size(); ++q)
        if ((y_hat[q] != 0) == (y[q] != 0)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(y.size());
}

window_evaluator::window_evaluator(std::size_t window_len, std::size_t n_labels)
    : window_len_(window_len), n_labels_(n_labels), per_label_(n_labels) {
    if (window_len_ < 1) throw std::invalid_argument("window length must be at least 1");
    if (n_labels_ < 1) throw std::invalid_argument("evaluator needs at least one label");
}

metric_snapshot window_evaluator::step(const std::vector<std::uint8_t>& y_hat,
                                       const std::vector<std::uint8_t>& y) {
    if (y_hat.size() != n_labels_ || y.size() != n_labels_)
        throw std::invalid_argument("label arity does not match the evaluator");
    if (buffer_.size() == window_len_) {
        const entry& old = buffer_.front();
        for (std::size_t q = 0; q < n_labels_; ++q) {
            confusion_counts& c = per_label_[q];
            if (old.y[q]) {
                if (old.y_hat[q]) --c.tp;
                else --c.fn;
            } else {
                if (old.y_hat[q]) --c.fp;
                else --c.tn;
            }
        }
        buffer_.pop_front();
    }
    entry e;
    e.y_hat = y_hat;
    e.y = y;
    e.ls = ls_gmean_step(y_hat, y);
    e.hs = hamming_score_step(y_hat, y);
    for (std::size_t q = 0; q < n_labels_; ++q) {
        confusion_counts& c = per_label_[q];
        if (y[q]) {
            if (y_hat[q]) ++c.tp;
            else ++c.fn;
        } else {
            if (y_hat[q]) ++c.fp;
            else ++c.tn;
        }
    }
    buffer_.push_back(std::move(e));
    return current();
}

metric_snapshot window_evaluator::current() const {
    metric_snapshot snap;
    snap.macro_gmean = macro_gmean(per_label_);
    snap.micro_gmean = micro_gmean(per_label_);
    if (!buffer_.empty()) {
        // summed in buffer order so a from-scratch recount reproduces the
        // same floating-point result bit for bit
        double ls = 0.0, hs = 0.0;
        for (const entry& e : buffer_) {
            ls += e.ls;
            hs += e.hs;
        }
        snap.ls_gmean = ls / static_cast<double>(buffer_.size());
        snap.hscore = hs / static_cast<double>(buffer_.size());
    }
    snap.hloss = 1.0 - snap.hscore;
    return snap;
}

double window_evaluator::label_gmean(std::size_t q) const {
    if (q >= n_labels_) throw std::out_of_range("label index out of range");
    return gmean(per_label_[q]);
}

void label_gmean_tracker::step(const std::vector<std::uint8_t>& y_hat,
                               const std::vector<std::uint8_t>& y) {
    if (y_hat.size() != per_label_.size() || y.size() != per_label_.size())
        throw std::invalid_argument("label arity does not match the tracker");
    for (std::size_t q = 0; q < per_label_.size(); ++q) {
        confusion_counts& c = per_label_[q];
        if (y[q]) {
            if (y_hat[q]) ++c.tp;
            else ++c.fn;
        } else {
            if (y_hat[q]) ++c.fp;
            else ++c.tn;
        }
    }
}

void label_gmean_tracker::reset(std::size_t label) {
    if (label >= per_label_.size()) throw std::out_of_range("label index out of range");
    per_label_[label] = confusion_counts{};
}

double label_gmean_tracker::gmean_of(std::size_t label) const {
    if (label >= per_label_.size()) throw std::out_of_range("label index out of range");
    return gmean(per_label_[label]);
}

double label_gmean_tracker::mean_gmean() const {
    return macro_gmean(per_label_);
}

std::string snapshot_csv_header(std::size_t n_labels_for_columns) {
    std::string h = "step,macro_gmean,micro_gmean,ls_gmean,hscore,hloss";
    for (std::size_t q = 0; q < n_labels_for_columns; ++q)
        h += ",gmean_l" + std::to_string(q);
    return h;
}

std::string snapshot_csv_row(std::uint64_t step, const metric_snapshot& snap,
                             const window_evaluator* per_label_source) {
    std::ostringstream out;
    out.precision(9);
    out << step << ',' << snap.macro_gmean << ',' << snap.micro_gmean << ',' << snap.ls_gmean
        << ',' << snap.hscore << ',' << snap.hloss;
    if (per_label_source)
        for (std::size_t q = 0; q < per_label_source->n_labels(); ++q)
            out << ',' << per_label_source->label_gmean(q);
    return out.str();
}

} // namespace marlene
