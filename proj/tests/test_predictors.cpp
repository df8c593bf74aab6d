#include <doctest.h>

#include <cmath>
#include <vector>

#include "airis2/dataset.hpp"
#include "airis2/predictors.hpp"
#include "airis2/timeseries.hpp"
#include "airis2/training.hpp"
#include "support.hpp"

using namespace airis2;
using testsupport::error_code_of;

TEST_CASE("persistence threshold is strict") {
    CHECK(persistence_predict(7.0, 5.0).event_predicted);
    CHECK(persistence_predict(7.0, 5.0).probability == 1.0);
    CHECK_FALSE(persistence_predict(5.0, 5.0).event_predicted);
    CHECK_FALSE(persistence_predict(4.999, 5.0).event_predicted);
    CHECK(persistence_predict(4.999, 5.0).probability == 0.0);
}

TEST_CASE("persistence equals the zero-horizon label on random series") {
    SynthParams p;
    p.m_ln = 1.0;
    p.beta_inv_s = 0.1;
    p.duration_s = 300.0;
    p.seed = 4;
    auto series = generate_synthetic(p);
    const double alpha = 3.0;
    for (std::size_t anchor = 0; anchor < series.size(); ++anchor) {
        const bool zero_horizon_label = series.values[anchor] > alpha;
        CHECK(persistence_predict(series.values[anchor], alpha).event_predicted ==
              zero_horizon_label);
    }
}

TEST_CASE("airis2 prediction at the probability boundary") {
    ModelConfig cfg{4, 1, 0.0, 6};
    LstmClassifier model;
    model.config = cfg;
    model.params.assign(cfg.parameter_count(), 0.0); // probability exactly 0.5
    std::vector<double> window(6, 0.3);

    auto at_half = airis2_predict(model, window, 0.5);
    CHECK(at_half.probability == 0.5);
    CHECK(at_half.event_predicted); // >= convention makes the boundary deterministic

    CHECK_FALSE(airis2_predict(model, window, 1.0).event_predicted);
}

TEST_CASE("raising the threshold never turns a negative into a positive") {
    ModelConfig cfg{5, 1, 0.15, 10};
    auto model = init_model(cfg, 21);
    Rng rng(8);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> window(10);
        for (double& v : window) v = rng.normal();
        const auto low = airis2_predict(model, window, 0.3);
        const auto high = airis2_predict(model, window, 0.7);
        if (high.event_predicted) CHECK(low.event_predicted);
        CHECK(low.probability == high.probability);
    }
}

TEST_CASE("trained separable model is confident on a positive window") {
    auto split = testsupport::make_separable_split(200, 20);
    ModelConfig mc{8, 1, 0.15, 20};
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 8;
    tc.learning_rate = 0.05;
    tc.seed = 9;
    auto outcome = train(init_model(mc, 10), split, tc);

    bool saw_positive = false;
    for (const auto& w : split.test) {
        if (!w.label) continue;
        saw_positive = true;
        CHECK(airis2_predict(outcome.model, w.features).probability > 0.9);
    }
    CHECK(saw_positive);
}

TEST_CASE("oracle matches the dataset labels anchor by anchor") {
    SynthParams p;
    p.m_ln = 1.2;
    p.sigma_ln = 0.8;
    p.beta_inv_s = 0.05;
    p.duration_s = 500.0;
    p.sample_rate_hz = 5.0;
    p.seed = 19;
    auto series = generate_synthetic(p);
    WindowSpec spec{.alpha_db = 4.0, .delta_t_s = 12.0};
    auto windows = make_windows(series, spec);
    REQUIRE(!windows.empty());
    for (const auto& w : windows) {
        const auto pred = oracle_predict(series, w.anchor_index, spec.alpha_db, spec.delta_t_s);
        CHECK(pred.event_predicted == w.label);
        CHECK(pred.anchor_index == static_cast<std::ptrdiff_t>(w.anchor_index));
    }
}

TEST_CASE("oracle fires exactly delta_t before a step crossing") {
    AttenuationSeries series;
    series.sample_rate_hz = 10.0;
    series.values.assign(2000, 0.0);
    for (std::size_t i = 1500; i < 2000; ++i) series.values[i] = 10.0;

    const double alpha = 5.0;
    const double delta_t = 30.0; // 300 samples
    // brute-force scan of the first anchor the oracle flags
    std::size_t first_flag = series.size();
    for (std::size_t anchor = 0; anchor + 300 < series.size(); ++anchor) {
        if (oracle_predict(series, anchor, alpha, delta_t).event_predicted) {
            first_flag = anchor;
            break;
        }
    }
    CHECK(first_flag == 1200); // 1500 - 300
}

TEST_CASE("oracle on a sub-threshold series never fires") {
    AttenuationSeries series;
    series.sample_rate_hz = 10.0;
    series.values.assign(500, 2.0);
    for (std::size_t anchor = 0; anchor + 100 < series.size(); ++anchor)
        CHECK_FALSE(oracle_predict(series, anchor, 5.0, 10.0).event_predicted);
}

TEST_CASE("predictions render to the pinned csv layout") {
    std::vector<Prediction> preds{{true, 0.75, 10}, {false, 0.25, 14}};
    std::vector<bool> labels{true, true};
    const auto csv = render_predictions_csv(preds, labels);
    CHECK(csv == "anchor_index,probability,predicted,label\n"
                 "10,0.75,1,1\n"
                 "14,0.25,0,1\n");
    CHECK(error_code_of([&] { render_predictions_csv(preds, {true}); }) == ErrorCode::shape_error);
}

TEST_CASE("oracle rejects anchors whose horizon leaves the series") {
    AttenuationSeries series;
    series.sample_rate_hz = 10.0;
    series.values.assign(100, 1.0);
    CHECK(error_code_of([&] { oracle_predict(series, 95, 5.0, 1.0); }) == ErrorCode::range_error);
    CHECK(error_code_of([&] { oracle_predict(series, 500, 5.0, 1.0); }) == ErrorCode::range_error);
}
