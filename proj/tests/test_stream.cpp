#include "doctest.h"

#include "marlene/rng.hpp"
#include "marlene/stream.hpp"

#include <string>
#include <vector>

using namespace marlene;

namespace {

bool same_instance(const instance& a, const instance& b) {
    return a.x == b.x && a.y == b.y && a.stream == b.stream && a.t == b.t;
}

bool same_items(const std::vector<instance>& a, const std::vector<instance>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!same_instance(a[i], b[i])) return false;
    return true;
}

instance labeled(std::vector<double> x, std::vector<int> y) {
    instance ins;
    ins.x = std::move(x);
    for (int b : y) ins.y.push_back(static_cast<std::uint8_t>(b));
    return ins;
}

} // namespace

TEST_CASE("arff dense rows follow the label-count convention") {
    std::string text =
        "@relation 'toy: -C 2'\n"
        "@attribute l1 {0,1}\n"
        "@attribute l2 {0,1}\n"
        "@attribute f1 numeric\n"
        "@data\n"
        "1,0,3.5\n";
    dataset ds = read_arff(text);
    CHECK(ds.meta.name == "toy");
    CHECK(ds.meta.n_features == 1);
    CHECK(ds.meta.n_labels == 2);
    REQUIRE(ds.items.size() == 1);
    CHECK(ds.items[0].y == std::vector<std::uint8_t>{1, 0});
    CHECK(ds.items[0].x == std::vector<double>{3.5});
    CHECK(ds.items[0].stream.is_target());
}

TEST_CASE("arff negative label count puts labels last") {
    std::string text =
        "@relation 'toy: -C -2'\n"
        "@attribute f1 numeric\n"
        "@attribute l1 {0,1}\n"
        "@attribute l2 {0,1}\n"
        "@data\n"
        "3.5,1,0\n";
    dataset ds = read_arff(text);
    CHECK(ds.meta.n_features == 1);
    CHECK(ds.meta.n_labels == 2);
    CHECK(ds.items[0].x == std::vector<double>{3.5});
    CHECK(ds.items[0].y == std::vector<std::uint8_t>{1, 0});
}

TEST_CASE("arff sparse rows fill unstated attributes with zero") {
    std::string text =
        "@RELATION 'toy: -C 2'\n"
        "% a comment\n"
        "@ATTRIBUTE l1 {0,1}\n"
        "@ATTRIBUTE l2 {0,1}\n"
        "@ATTRIBUTE f1 numeric\n"
        "@DATA\n"
        "{0 1, 2 3.5}\n"
        "{}\n";
    dataset ds = read_arff(text);
    REQUIRE(ds.items.size() == 2);
    CHECK(ds.items[0].y == std::vector<std::uint8_t>{1, 0});
    CHECK(ds.items[0].x == std::vector<double>{3.5});
    CHECK(ds.items[1].y == std::vector<std::uint8_t>{0, 0});
    CHECK(ds.items[1].x == std::vector<double>{0.0});
}

TEST_CASE("arff rows with the wrong arity are rejected with position info") {
    std::string text =
        "@relation 'toy: -C 2'\n"
        "@attribute l1 {0,1}\n"
        "@attribute l2 {0,1}\n"
        "@attribute f1 numeric\n"
        "@data\n"
        "1,0,3.5,9\n";
    CHECK_THROWS_AS(read_arff(text), parse_error);
    try {
        read_arff(text);
    } catch (const parse_error& e) {
        CHECK(e.line == 6);
        CHECK(std::string(e.what()).find("row") != std::string::npos);
    }
}

TEST_CASE("arff non-binary label values are a schema error") {
    std::string text =
        "@relation 'toy: -C 1'\n"
        "@attribute l1 numeric\n"
        "@attribute f1 numeric\n"
        "@data\n"
        "2,3.5\n";
    CHECK_THROWS_AS(read_arff(text), parse_error);
}

TEST_CASE("arff malformed headers report the offending line") {
    CHECK_THROWS_AS(read_arff("@relation 'toy'\n@data\n"), parse_error); // no -C
    CHECK_THROWS_AS(read_arff("@relation 'toy: -C 2'\n@data\n"), parse_error); // no attrs
    CHECK_THROWS_AS(read_arff("@attribute f1 numeric\n@data\n"), parse_error); // no relation
    std::string bad_type =
        "@relation 'toy: -C 1'\n@attribute l1 {a,b}\n@attribute f1 numeric\n@data\n";
    CHECK_THROWS_AS(read_arff(bad_type), parse_error);
    try {
        read_arff(bad_type);
    } catch (const parse_error& e) {
        CHECK(e.line == 2);
    }
    std::string bad_count =
        "@relation 'toy: -C 5'\n@attribute l1 {0,1}\n@attribute f1 numeric\n@data\n";
    CHECK_THROWS_AS(read_arff(bad_count), parse_error);
}

TEST_CASE("arff missing values use zero for binary and running mean for numeric") {
    std::string text =
        "@relation 'toy: -C 1'\n"
        "@attribute l1 {0,1}\n"
        "@attribute f1 numeric\n"
        "@attribute f2 {0,1}\n"
        "@data\n"
        "1,2.0,?\n"
        "0,?,1\n"
        "1,4.0,0\n"
        "0,?,1\n";
    dataset ds = read_arff(text);
    REQUIRE(ds.items.size() == 4);
    CHECK(ds.items[0].x[1] == 0.0);
    CHECK(ds.items[1].x[0] == doctest::Approx(2.0));
    CHECK(ds.items[3].x[0] == doctest::Approx(3.0));
}

TEST_CASE("arff write then read is the identity on instances") {
    rng r(7);
    dataset ds;
    ds.meta.name = "rt";
    ds.meta.n_features = 3;
    ds.meta.n_labels = 2;
    ds.meta.feature_kinds = {feature_kind::numeric, feature_kind::binary, feature_kind::numeric};
    for (int i = 0; i < 40; ++i) {
        instance ins;
        ins.x = {r.normal(), static_cast<double>(r.uniform_index(2)), r.uniform(-5, 5)};
        ins.y = {static_cast<std::uint8_t>(r.uniform_index(2)),
                 static_cast<std::uint8_t>(r.uniform_index(2))};
        ins.stream = stream_id::target();
        ins.t = static_cast<std::uint64_t>(i);
        ds.items.push_back(ins);
    }
    dataset back = read_arff(write_arff(ds));
    CHECK(back.meta.n_features == ds.meta.n_features);
    CHECK(back.meta.n_labels == ds.meta.n_labels);
    CHECK(back.meta.feature_kinds == ds.meta.feature_kinds);
    CHECK(same_items(back.items, ds.items));
    dataset again = read_arff(write_arff(back));
    CHECK(same_items(again.items, back.items));
}

TEST_CASE("csv write then read is the identity on instances") {
    rng r(11);
    dataset ds;
    ds.meta.name = "rt";
    ds.meta.n_features = 2;
    ds.meta.n_labels = 3;
    ds.meta.feature_kinds = {feature_kind::numeric, feature_kind::numeric};
    for (int i = 0; i < 25; ++i) {
        instance ins;
        ins.x = {r.normal(), r.uniform(0, 1)};
        ins.y = {static_cast<std::uint8_t>(r.uniform_index(2)),
                 static_cast<std::uint8_t>(r.uniform_index(2)),
                 static_cast<std::uint8_t>(r.uniform_index(2))};
        ins.stream = stream_id::target();
        ins.t = static_cast<std::uint64_t>(i);
        ds.items.push_back(ins);
    }
    dataset back = read_csv(write_csv(ds), 3, "rt");
    CHECK(same_items(back.items, ds.items));
    CHECK_THROWS_AS(read_csv("f1,l1\nx,1\n", 1), parse_error);
    CHECK_THROWS_AS(read_csv("f1,l1\n0.5,2\n", 1), parse_error);
    CHECK_THROWS_AS(read_csv("f1,l1\n0.5\n", 1), parse_error);
}

TEST_CASE("dataset_stats hand-counted example") {
    std::vector<instance> data = {labeled({0.0}, {1, 0}), labeled({0.0}, {1, 1})};
    auto st = dataset_stats(data);
    CHECK(st.lden == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(st.lir == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(st.lsir == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("dataset_stats on all-zero labels is all zeros") {
    std::vector<instance> data = {labeled({0.0}, {0, 0, 0}), labeled({1.0}, {0, 0, 0})};
    auto st = dataset_stats(data);
    CHECK(st.lden == 0.0);
    CHECK(st.lir == 0.0);
    CHECK(st.lsir == 0.0);
}

TEST_CASE("dataset_stats rejects degenerate input") {
    CHECK_THROWS_AS(dataset_stats({}), std::invalid_argument);
    std::vector<instance> bad = {labeled({0.0}, {1, 0}), labeled({0.0}, {1})};
    CHECK_THROWS_AS(dataset_stats(bad), std::invalid_argument);
}

TEST_CASE("dataset_stats matches a per-slot counting oracle on random data") {
    rng r(99);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 1 + r.uniform_index(20);
        std::size_t n_labels = 1 + r.uniform_index(5);
        std::vector<instance> data;
        for (std::size_t i = 0; i < n; ++i) {
            instance ins;
            ins.x = {0.0};
            for (std::size_t q = 0; q < n_labels; ++q)
                ins.y.push_back(static_cast<std::uint8_t>(r.uniform01() < 0.35 ? 1 : 0));
            data.push_back(ins);
        }
        double lden = 0, lir = 0, lsir = 0;
        for (std::size_t q = 0; q < n_labels; ++q) {
            double pos = 0;
            for (const auto& ins : data) pos += ins.y[q];
            double minority = pos <= n - pos ? pos : n - pos;
            lir += minority / static_cast<double>(n) / static_cast<double>(n_labels);
        }
        for (const auto& ins : data) {
            double m = 0;
            for (std::size_t q = 0; q < n_labels; ++q) m += ins.y[q];
            lden += m / static_cast<double>(n_labels) / static_cast<double>(n);
            double minority = m <= n_labels - m ? m : n_labels - m;
            lsir += minority / static_cast<double>(n_labels) / static_cast<double>(n);
        }
        auto st = dataset_stats(data);
        CHECK(st.lden == doctest::Approx(lden).epsilon(1e-12));
        CHECK(st.lir == doctest::Approx(lir).epsilon(1e-12));
        CHECK(st.lsir == doctest::Approx(lsir).epsilon(1e-12));
        CHECK(st.lden >= 0.0);
        CHECK(st.lden <= 1.0);
        CHECK(st.lir >= 0.0);
        CHECK(st.lir <= 0.5 + 1e-12);
        CHECK(st.lsir >= 0.0);
        CHECK(st.lsir <= 0.5 + 1e-12);
    }
}

TEST_CASE("lir equals lden when positives are the minority of every label") {
    rng r(123);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t n = 8 + r.uniform_index(12);
        std::size_t n_labels = 1 + r.uniform_index(5);
        std::vector<instance> data(n);
        for (auto& ins : data) {
            ins.x = {0.0};
            ins.y.assign(n_labels, 0);
        }
        for (std::size_t q = 0; q < n_labels; ++q) {
            std::size_t pos = r.uniform_index(n / 2 + 1); // at most half
            for (std::size_t i = 0; i < pos; ++i) data[i].y[q] = 1;
        }
        auto st = dataset_stats(data);
        CHECK(st.lir == doctest::Approx(st.lden).epsilon(1e-15));
    }
}

TEST_CASE("round-robin interleave cycles sources first then target") {
    std::vector<instance> target = {labeled({1.0}, {0}), labeled({2.0}, {0})};
    std::vector<instance> src = {labeled({10.0}, {0}), labeled({20.0}, {0})};
    auto sched = interleave(target, {src});
    REQUIRE(sched.size() == 4);
    CHECK(sched[0].x[0] == 10.0); // s1
    CHECK(sched[1].x[0] == 1.0);  // a
    CHECK(sched[2].x[0] == 20.0); // s2
    CHECK(sched[3].x[0] == 2.0);  // b
    CHECK(sched[0].stream == stream_id::source(1));
    CHECK(sched[1].stream == stream_id::target());
    CHECK(sched[2].t == 1);
}

TEST_CASE("interleave with no sources is the target sequence") {
    std::vector<instance> target = {labeled({1.0}, {0}), labeled({2.0}, {0}),
                                    labeled({3.0}, {0})};
    auto sched = interleave(target, {});
    REQUIRE(sched.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(sched[i].x[0] == target[i].x[0]);
        CHECK(sched[i].stream.is_target());
        CHECK(sched[i].t == i);
    }
}

TEST_CASE("exhausted streams drop out and the rest keeps its order") {
    std::vector<instance> target = {labeled({1.0}, {0})};
    std::vector<instance> s1 = {labeled({10.0}, {0}), labeled({11.0}, {0}),
                                labeled({12.0}, {0})};
    auto sched = interleave(target, {s1});
    REQUIRE(sched.size() == 4);
    CHECK(sched[0].x[0] == 10.0);
    CHECK(sched[1].x[0] == 1.0);
    CHECK(sched[2].x[0] == 11.0);
    CHECK(sched[3].x[0] == 12.0);
}

TEST_CASE("interleave is deterministic and preserves per-stream order") {
    rng r(5);
    std::vector<instance> target, s1, s2;
    for (int i = 0; i < 17; ++i) target.push_back(labeled({r.normal()}, {0}));
    for (int i = 0; i < 9; ++i) s1.push_back(labeled({r.normal()}, {1}));
    for (int i = 0; i < 23; ++i) s2.push_back(labeled({r.normal()}, {0}));
    for (auto policy : {interleave_policy::round_robin, interleave_policy::proportional}) {
        auto a = interleave(target, {s1, s2}, policy, 42);
        auto b = interleave(target, {s1, s2}, policy, 42);
        CHECK(same_items(a, b));
        CHECK(a.size() == target.size() + s1.size() + s2.size());
        std::uint64_t next_t[3] = {0, 0, 0};
        for (const auto& ins : a) {
            auto k = static_cast<std::size_t>(ins.stream.index);
            CHECK(ins.t == next_t[k]);
            ++next_t[k];
        }
    }
}

TEST_CASE("proportional interleave paces streams to finish together") {
    std::vector<instance> target = {labeled({1.0}, {0}), labeled({2.0}, {0})};
    std::vector<instance> src;
    for (int i = 0; i < 6; ++i) src.push_back(labeled({10.0 + i}, {0}));
    auto sched = interleave(target, {src}, interleave_policy::proportional);
    REQUIRE(sched.size() == 8);
    CHECK(sched[3].stream.is_target()); // three source examples per target example
    CHECK(sched[7].stream.is_target());
    for (int i = 0; i < 3; ++i) CHECK(sched[i].stream == stream_id::source(1));
    for (int i = 4; i < 7; ++i) CHECK(sched[i].stream == stream_id::source(1));
}

TEST_CASE("explicit schedules consume the named streams in order") {
    std::vector<instance> target = {labeled({1.0}, {0}), labeled({2.0}, {0})};
    std::vector<instance> src = {labeled({10.0}, {0}), labeled({20.0}, {0})};
    auto sched = interleave_explicit(target, {src}, {1, 0, 1, 0});
    REQUIRE(sched.size() == 4);
    CHECK(sched[0].x[0] == 10.0);
    CHECK(sched[1].x[0] == 1.0);
    CHECK(sched[2].x[0] == 20.0);
    CHECK(sched[3].x[0] == 2.0);
    auto skip = interleave_explicit(target, {src}, {1, 1, 1, 0, 0});
    REQUIRE(skip.size() == 4);
    CHECK(skip[2].x[0] == 1.0);
    CHECK_THROWS_AS(interleave_explicit(target, {src}, {2}), std::invalid_argument);
}
