#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "airis2/evaluation.hpp"
#include "airis2/timeseries.hpp"
#include "support.hpp"

using namespace airis2;
using testsupport::error_code_of;
using testsupport::within;

namespace {

AttenuationSeries predictable_series(std::uint64_t seed, double duration_s = 4000.0) {
    SynthParams p;
    p.m_ln = 0.63;       // P[A > 4 dB] around 20%
    p.sigma_ln = 0.9;
    p.beta_inv_s = 0.01; // decorrelation time 100 s
    p.duration_s = duration_s;
    p.sample_rate_hz = 2.0;
    p.seed = seed;
    return generate_synthetic(p);
}

SweepConfig small_sweep_config() {
    SweepConfig config;
    config.alphas_db = {4.0};
    config.deltas_t_s = {10.0};
    config.stride_samples = 2;
    config.hidden_size = 6;
    config.train.epochs = 3;
    config.train.batch_size = 16;
    config.train.learning_rate = 0.01;
    config.train.seed = 5;
    config.seed = 17;
    return config;
}

} // namespace

TEST_CASE("confusion counts the four joint outcomes") {
    SUBCASE("all correct") {
        auto cm = confusion({true, false, true}, {true, false, true});
        CHECK(cm.tp == 2);
        CHECK(cm.tn == 1);
        CHECK(cm.fp == 0);
        CHECK(cm.fn == 0);
    }
    SUBCASE("all inverted") {
        auto cm = confusion({false, true}, {true, false});
        CHECK(cm.tp == 0);
        CHECK(cm.tn == 0);
        CHECK(cm.fp == 1);
        CHECK(cm.fn == 1);
    }
    SUBCASE("hand-counted four-sample fixture") {
        auto cm = confusion({true, false, false, true}, {true, true, false, false});
        CHECK(cm.tp == 1);
        CHECK(cm.fn == 1);
        CHECK(cm.tn == 1);
        CHECK(cm.fp == 1);
    }
    SUBCASE("length mismatch") {
        CHECK(error_code_of([&] { confusion({true}, {true, false}); }) == ErrorCode::shape_error);
    }
    SUBCASE("empty") {
        CHECK(error_code_of([&] { confusion({}, {}); }) == ErrorCode::insufficient_data);
    }
}

TEST_CASE("percent views sum to one hundred") {
    auto check_sum = [](const ConfusionMatrix& cm) {
        const auto pct = percent_view(cm);
        CHECK(within(pct.sum(), 100.0, 0.01));
    };
    check_sum({1, 1, 1, 1});
    check_sum({997, 2, 1, 0});
    check_sum({0, 0, 0, 7});
    check_sum({123456, 654, 321, 987654});

    const auto pct = percent_view({1, 1, 1, 1});
    CHECK(pct.tp == 25.0);
    CHECK(pct.fn == 25.0);
}

TEST_CASE("rates on the balanced four-sample fixture are all one half") {
    const ConfusionMatrix cm{1, 1, 1, 1};
    const auto r = rates(cm);
    CHECK(r.fn_rate_total == 0.25); // fn / total
    CHECK(r.fp_rate_total == 0.25);
    REQUIRE(r.miss_rate.has_value());
    REQUIRE(r.false_alarm_rate.has_value());
    CHECK(*r.miss_rate == 0.5);
    CHECK(*r.false_alarm_rate == 0.5);
    CHECK(r.accuracy == 0.5);
}

TEST_CASE("conditional rates are undefined without their class") {
    const auto no_positives = rates({0, 2, 0, 8});
    CHECK_FALSE(no_positives.miss_rate.has_value());
    CHECK(no_positives.false_alarm_rate.has_value());

    const auto no_negatives = rates({5, 0, 3, 0});
    CHECK(no_negatives.miss_rate.has_value());
    CHECK_FALSE(no_negatives.false_alarm_rate.has_value());
}

TEST_CASE("empty alpha list produces an empty grid") {
    auto series = predictable_series(1, 400.0);
    SweepConfig config = small_sweep_config();
    config.alphas_db.clear();
    auto result = sweep(series, config);
    CHECK(result.cells.empty());
    CHECK(flatten(result).empty());
    CHECK(error_code_of([&] { render_report(result, "csv"); }) == ErrorCode::insufficient_data);
}

TEST_CASE("unknown report format is a usage error") {
    SweepResult result;
    result.cells.push_back({5.0, 30.0, {}});
    CHECK(error_code_of([&] { render_report(result, "yaml"); }) == ErrorCode::usage_error);
}

TEST_CASE("single-cell sweep: learned predictor beats persistence on misses") {
    auto series = predictable_series(7);
    auto config = small_sweep_config();
    auto result = sweep(series, config);
    REQUIRE(result.cells.size() == 1);
    const auto& entries = result.cells[0].entries;
    REQUIRE(entries.size() == 2);
    REQUIRE_FALSE(entries[0].skipped);
    REQUIRE_FALSE(entries[1].skipped);
    CHECK(entries[0].predictor == kAiris2Predictor);
    CHECK(entries[1].predictor == kPersistencePredictor);
    CHECK(entries[0].n_test == entries[1].n_test); // identical test anchors
    CHECK(entries[0].rate_set.fn_rate_total <= entries[1].rate_set.fn_rate_total);
}

TEST_CASE("persistence rows do not depend on the training stream") {
    auto series = predictable_series(3, 2000.0);
    auto config = small_sweep_config();
    auto result_a = sweep(series, config);

    config.train.seed = 999;
    config.train.epochs = 1;
    config.train.learning_rate = 0.5;
    auto result_b = sweep(series, config);

    const auto& ph_a = result_a.cells[0].entries[1];
    const auto& ph_b = result_b.cells[0].entries[1];
    REQUIRE(ph_a.predictor == kPersistencePredictor);
    CHECK(ph_a.cm.tp == ph_b.cm.tp);
    CHECK(ph_a.cm.fp == ph_b.cm.fp);
    CHECK(ph_a.cm.fn == ph_b.cm.fn);
    CHECK(ph_a.cm.tn == ph_b.cm.tn);
}

TEST_CASE("a cell without positive windows is skipped with a reason") {
    auto series = predictable_series(11, 2000.0);
    auto config = small_sweep_config();
    config.alphas_db = {1000.0};
    auto result = sweep(series, config);
    REQUIRE(result.cells.size() == 1);
    const auto& entries = result.cells[0].entries;
    REQUIRE(entries.size() == 2);
    for (const auto& entry : entries) {
        CHECK(entry.skipped);
        CHECK(!entry.reason.empty());
    }

    auto rows = flatten(result);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].skipped);
    CHECK_FALSE(rows[0].fn_rate_total.has_value());
}

TEST_CASE("sweep grid covers the full cartesian product and renders 2 rows per cell") {
    auto series = predictable_series(13, 2000.0);
    auto config = small_sweep_config();
    config.alphas_db = {4.0, 1000.0};
    config.deltas_t_s = {5.0, 10.0};
    config.train.epochs = 1;
    auto result = sweep(series, config);
    REQUIRE(result.cells.size() == 4);
    auto rows = flatten(result);
    CHECK(rows.size() == 8);

    const auto csv = render_sweep_csv(result);
    CHECK(csv.rfind(kSweepCsvHeader, 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);

    SUBCASE("csv round-trips through the parser") {
        auto parsed = parse_sweep_csv(csv);
        REQUIRE(parsed.size() == rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            CHECK(parsed[i].predictor == rows[i].predictor);
            CHECK(parsed[i].alpha_db == rows[i].alpha_db);
            CHECK(parsed[i].delta_t_s == rows[i].delta_t_s);
            CHECK(parsed[i].fn_rate_total == rows[i].fn_rate_total);
            CHECK(parsed[i].fp_rate_total == rows[i].fp_rate_total);
            CHECK(parsed[i].miss_rate == rows[i].miss_rate);
            CHECK(parsed[i].false_alarm_rate == rows[i].false_alarm_rate);
            CHECK(parsed[i].accuracy == rows[i].accuracy);
            CHECK(parsed[i].n_test == rows[i].n_test);
            CHECK(parsed[i].skipped == rows[i].skipped);
            CHECK(parsed[i].reason == rows[i].reason);
        }
    }

    SUBCASE("json rendering carries the same rows and validates") {
        const auto text = render_sweep_json(result);
        const auto doc = nlohmann::json::parse(text);
        CHECK(doc.at("format") == "airis2-sweep");
        REQUIRE(doc.at("rows").size() == rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& j = doc.at("rows")[i];
            CHECK(j.at("predictor").get<std::string>() == rows[i].predictor);
            CHECK(j.at("n_test").get<std::size_t>() == rows[i].n_test);
            if (rows[i].fn_rate_total)
                CHECK(j.at("fn_rate_total").get<double>() == *rows[i].fn_rate_total);
            else
                CHECK(j.at("fn_rate_total").is_null());
        }
    }
}

TEST_CASE("workers produce the same grid as the sequential path") {
    auto series = predictable_series(29, 1500.0);
    auto config = small_sweep_config();
    config.alphas_db = {4.0, 6.0};
    config.deltas_t_s = {5.0, 10.0};
    config.train.epochs = 1;

    config.workers = 1;
    auto sequential = sweep(series, config);
    config.workers = 4;
    auto parallel = sweep(series, config);
    CHECK(render_sweep_csv(sequential) == render_sweep_csv(parallel));
}

TEST_CASE("persistence miss rate grows with the horizon on slow fades") {
    auto series = predictable_series(41, 20000.0);
    const double alpha = 4.0;
    std::vector<double> miss_rates;
    for (double delta : {5.0, 15.0, 30.0}) {
        const auto horizon = static_cast<std::size_t>(std::llround(delta * series.sample_rate_hz));
        std::vector<bool> preds;
        std::vector<bool> labels;
        for (std::size_t anchor = 0; anchor + horizon < series.size(); ++anchor) {
            preds.push_back(series.values[anchor] > alpha);
            labels.push_back(series.values[anchor + horizon] > alpha);
        }
        const auto r = rates(confusion(preds, labels));
        REQUIRE(r.miss_rate.has_value());
        miss_rates.push_back(*r.miss_rate);
    }
    CHECK(miss_rates[0] <= miss_rates[1]);
    CHECK(miss_rates[1] <= miss_rates[2]);
}
