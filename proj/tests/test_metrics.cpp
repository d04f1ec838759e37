#include "doctest.h"

#include "marlene/metrics.hpp"
#include "marlene/rng.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

using namespace marlene;

namespace {

// independent recount: recompute every metric from the buffer alone,
// sharing no state with the evaluator's incremental counters
metric_snapshot recount(const window_evaluator& ev) {
    std::vector<confusion_counts> counts(ev.n_labels());
    double ls = 0.0, hs = 0.0;
    for (const auto& e : ev.buffer()) {
        for (std::size_t q = 0; q < ev.n_labels(); ++q) {
            confusion_counts& c = counts[q];
            if (e.y[q]) {
                if (e.y_hat[q]) ++c.tp;
                else ++c.fn;
            } else {
                if (e.y_hat[q]) ++c.fp;
                else ++c.tn;
            }
        }
        ls += ls_gmean_step(e.y_hat, e.y);
        hs += hamming_score_step(e.y_hat, e.y);
    }
    metric_snapshot snap;
    snap.macro_gmean = macro_gmean(counts);
    snap.micro_gmean = micro_gmean(counts);
    if (!ev.buffer().empty()) {
        snap.ls_gmean = ls / static_cast<double>(ev.buffer().size());
        snap.hscore = hs / static_cast<double>(ev.buffer().size());
    }
    snap.hloss = 1.0 - snap.hscore;
    return snap;
}

std::vector<std::uint8_t> random_labels(rng& r, std::size_t n, double p) {
    std::vector<std::uint8_t> y(n);
    for (auto& v : y) v = r.uniform01() < p ? 1 : 0;
    return y;
}

} // namespace

TEST_CASE("gmean on pinned counts") {
    CHECK(gmean({5, 0, 5, 0}) == 1.0);
    CHECK(gmean({3, 0, 4, 1}) == doctest::Approx(std::sqrt(0.75)).epsilon(1e-12));
    CHECK(gmean({0, 0, 9, 4}) == 0.0);
    // absent class contributes a vacuous recall of 1
    CHECK(gmean({0, 1, 3, 0}) == doctest::Approx(std::sqrt(0.75)).epsilon(1e-12));
    CHECK(gmean({0, 0, 0, 0}) == 1.0);
}

TEST_CASE("macro gmean averages per-label values") {
    confusion_counts a{3, 0, 4, 1};
    CHECK(macro_gmean({a, a, a}) == doctest::Approx(gmean(a)).epsilon(1e-12));
    CHECK(macro_gmean({{5, 0, 5, 0}, {0, 0, 9, 4}}) == 0.5);
    CHECK_THROWS_AS((void)macro_gmean({}), std::invalid_argument);

    rng r(41);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<confusion_counts> counts;
        double want = 0.0;
        for (int q = 0; q < 3; ++q) {
            confusion_counts c{r.uniform_index(10), r.uniform_index(10), r.uniform_index(10),
                               r.uniform_index(10)};
            counts.push_back(c);
            double rp = c.tp + c.fn == 0 ? 1.0 : double(c.tp) / double(c.tp + c.fn);
            double rn = c.tn + c.fp == 0 ? 1.0 : double(c.tn) / double(c.tn + c.fp);
            want += std::sqrt(rp * rn);
        }
        CHECK(macro_gmean(counts) == doctest::Approx(want / 3.0).epsilon(1e-12));
    }
}

TEST_CASE("micro gmean pools counts before the ratio") {
    confusion_counts a{3, 1, 4, 2};
    CHECK(micro_gmean({a}) == gmean(a));
    CHECK(micro_gmean({{5, 0, 5, 0}, {4, 0, 6, 0}}) == 1.0);
    CHECK_THROWS_AS((void)micro_gmean({}), std::invalid_argument);

    // complementary errors: pooled recalls differ from averaged ones
    confusion_counts b{4, 0, 0, 4}, c{0, 4, 4, 0};
    double micro = micro_gmean({b, c});
    double macro = macro_gmean({b, c});
    CHECK(micro == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(macro != micro);

    // identical per-label counts collapse micro onto macro
    CHECK(micro_gmean({a, a, a}) == doctest::Approx(macro_gmean({a, a, a})).epsilon(1e-12));
}

TEST_CASE("label-set gmean scores one example's slots") {
    CHECK(ls_gmean_step({1, 0, 1, 0}, {1, 1, 0, 0}) == 0.5);
    CHECK(ls_gmean_step({1, 0, 1}, {1, 0, 1}) == 1.0);
    CHECK(ls_gmean_step({0, 0, 0}, {1, 1, 1}) == 0.0);
    CHECK_THROWS_AS((void)ls_gmean_step({1, 0}, {1}), std::invalid_argument);
    CHECK_THROWS_AS((void)ls_gmean_step({}, {}), std::invalid_argument);
}

TEST_CASE("hamming score counts matching slots") {
    CHECK(hamming_score_step({1, 0, 1, 0}, {1, 1, 0, 0}) == 0.5);
    CHECK(hamming_score_step({1, 1, 0}, {1, 1, 0}) == 1.0);
    CHECK(hamming_score_step({1, 1}, {0, 0}) == 0.0);
    CHECK_THROWS_AS((void)hamming_score_step({1}, {1, 0}), std::invalid_argument);
}

TEST_CASE("evaluator windows slide over perfect and broken runs") {
    window_evaluator ev(2, 3);
    for (int i = 0; i < 3; ++i) {
        auto snap = ev.step({1, 0, 1}, {1, 0, 1});
        CHECK(snap.macro_gmean == 1.0);
        CHECK(snap.micro_gmean == 1.0);
        CHECK(snap.ls_gmean == 1.0);
        CHECK(snap.hscore == 1.0);
        CHECK(snap.hloss == 0.0);
    }

    window_evaluator ev2(2, 2);
    ev2.step({1, 0}, {1, 0});
    ev2.step({0, 1}, {1, 0});
    auto third = ev2.step({0, 1}, {1, 0});
    CHECK(third.macro_gmean == 0.0);
    CHECK(third.hscore == 0.0);
    CHECK(third.hloss == 1.0);
}

TEST_CASE("every snapshot equals a from-scratch recount") {
    rng r(7);
    window_evaluator ev(7, 4);
    for (int i = 0; i < 50; ++i) {
        auto y = random_labels(r, 4, 0.35);
        auto y_hat = random_labels(r, 4, 0.5);
        auto snap = ev.step(y_hat, y);
        auto want = recount(ev);
        CHECK(snap.macro_gmean == want.macro_gmean);
        CHECK(snap.micro_gmean == want.micro_gmean);
        CHECK(snap.ls_gmean == want.ls_gmean);
        CHECK(snap.hscore == want.hscore);
        CHECK(snap.hloss == want.hloss);
        CHECK(ev.size() == std::min<std::size_t>(i + 1, 7));

        CHECK(snap.macro_gmean >= 0.0);
        CHECK(snap.macro_gmean <= 1.0);
        CHECK(snap.micro_gmean >= 0.0);
        CHECK(snap.micro_gmean <= 1.0);
        CHECK(snap.ls_gmean >= 0.0);
        CHECK(snap.ls_gmean <= 1.0);
        CHECK(snap.hscore >= 0.0);
        CHECK(snap.hscore <= 1.0);
        CHECK(snap.hscore + snap.hloss == 1.0);
    }
}

TEST_CASE("majority-class predictions zero the macro gmean") {
    rng r(19);
    window_evaluator ev(40, 3);
    metric_snapshot snap;
    // labels are rare, the dummy always answers 0
    for (int i = 0; i < 200; ++i) snap = ev.step({0, 0, 0}, random_labels(r, 3, 0.2));
    bool every_label_mixed = true;
    for (const auto& c : ev.per_label())
        if (c.tp + c.fn == 0 || c.tn + c.fp == 0) every_label_mixed = false;
    REQUIRE(every_label_mixed);
    CHECK(snap.macro_gmean == 0.0);
    CHECK(snap.hscore > 0.5);
}

TEST_CASE("evaluator rejects bad shapes") {
    CHECK_THROWS_AS(window_evaluator(0, 2), std::invalid_argument);
    CHECK_THROWS_AS(window_evaluator(5, 0), std::invalid_argument);
    window_evaluator ev(5, 2);
    CHECK_THROWS_AS((void)ev.step({1}, {1, 0}), std::invalid_argument);
    CHECK_THROWS_AS((void)ev.step({1, 0}, {1}), std::invalid_argument);
}

TEST_CASE("cumulative tracker resets one label at a time") {
    label_gmean_tracker tr(2);
    tr.step({1, 0}, {1, 0});
    tr.step({0, 0}, {1, 0});
    CHECK(tr.gmean_of(0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(tr.gmean_of(1) == 1.0);
    CHECK(tr.mean_gmean() ==
          doctest::Approx((std::sqrt(0.5) + 1.0) / 2.0).epsilon(1e-12));

    tr.reset(0);
    CHECK(tr.gmean_of(0) == 1.0);
    CHECK(tr.per_label()[1].tn == 2);
    CHECK_THROWS_AS(tr.reset(5), std::out_of_range);
    CHECK_THROWS_AS((void)tr.gmean_of(5), std::out_of_range);
    CHECK_THROWS_AS(tr.step({1}, {1}), std::invalid_argument);
}

TEST_CASE("csv serialization is stable") {
    CHECK(snapshot_csv_header() == "step,macro_gmean,micro_gmean,ls_gmean,hscore,hloss");
    CHECK(snapshot_csv_header(2) ==
          "step,macro_gmean,micro_gmean,ls_gmean,hscore,hloss,gmean_l0,gmean_l1");

    metric_snapshot snap;
    snap.macro_gmean = 0.25;
    snap.micro_gmean = 0.5;
    snap.ls_gmean = 0.75;
    snap.hscore = 0.625;
    snap.hloss = 0.375;
    CHECK(snapshot_csv_row(12, snap) == "12,0.25,0.5,0.75,0.625,0.375");

    window_evaluator ev(4, 2);
    ev.step({1, 0}, {1, 0});
    CHECK(snapshot_csv_row(1, ev.current(), &ev) == "1,1,1,1,1,0,1,1");
}
