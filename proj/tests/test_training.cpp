#include <doctest.h>

#include <cmath>
#include <vector>

#include "airis2/dataset.hpp"
#include "airis2/timeseries.hpp"
#include "airis2/training.hpp"
#include "support.hpp"

using namespace airis2;
using testsupport::error_code_of;
using testsupport::within;

TEST_CASE("binary cross-entropy reference points") {
    CHECK(bce_loss(0.5, true) == doctest::Approx(std::log(2.0)));
    CHECK(bce_loss(0.5, false) == doctest::Approx(std::log(2.0)));
    CHECK(bce_loss(1.0, true) <= 2e-12); // clamp absorbs the saturated case
    CHECK(bce_loss(0.9, false) == doctest::Approx(2.302585092994046));
    CHECK(bce_loss(0.0, false) <= 2e-12);
    CHECK(bce_loss(0.0, true) > 20.0); // -ln(1e-12)
}

TEST_CASE("adam leaves parameters alone on zero gradients") {
    TrainConfig cfg;
    std::vector<double> params{1.0, -2.0, 3.0};
    std::vector<double> grads{0.1, -0.2, 0.3};
    AdamState state(params.size());
    adam_step(params, grads, state, 1, cfg);

    std::vector<double> zeros(params.size(), 0.0);
    for (long t = 2; t <= 50; ++t) adam_step(params, zeros, state, t, cfg);
    // moments decay toward zero, so the drift shrinks every step
    CHECK(std::abs(state.first_moment[0]) < 0.1 * std::abs(0.1));
    // and with zero gradients from the start nothing moves at all
    std::vector<double> fresh{1.0, 1.0};
    std::vector<double> zeros2(2, 0.0);
    AdamState fresh_state(2);
    adam_step(fresh, zeros2, fresh_state, 1, cfg);
    CHECK(fresh == std::vector<double>{1.0, 1.0});
}

TEST_CASE("constant gradients converge to a learning-rate-sized step") {
    TrainConfig cfg;
    cfg.learning_rate = 1e-3;
    std::vector<double> params{0.0};
    std::vector<double> grads{0.37};
    AdamState state(1);
    double previous = params[0];
    double step_size = 0.0;
    for (long t = 1; t <= 1000; ++t) {
        adam_step(params, grads, state, t, cfg);
        step_size = std::abs(params[0] - previous);
        previous = params[0];
    }
    CHECK(within(step_size, cfg.learning_rate, 0.01 * cfg.learning_rate));
}

TEST_CASE("adam step magnitude is gradient-scale invariant") {
    TrainConfig cfg;
    std::vector<double> params{0.0, 0.0};
    std::vector<double> grads{0.02, 2.0}; // factor 100 apart
    AdamState state(2);
    std::array<double, 2> last_step{};
    std::array<double, 2> previous{0.0, 0.0};
    for (long t = 1; t <= 1000; ++t) {
        adam_step(params, grads, state, t, cfg);
        last_step[0] = std::abs(params[0] - previous[0]);
        last_step[1] = std::abs(params[1] - previous[1]);
        previous = {params[0], params[1]};
    }
    CHECK(within(last_step[0], last_step[1], 1e-6 * last_step[1]));
}

TEST_CASE("scaling all gradients keeps update directions") {
    TrainConfig cfg;
    Rng rng(5);
    const std::size_t n = 16;
    std::vector<double> params_a(n, 0.0);
    std::vector<double> params_b(n, 0.0);
    AdamState state_a(n);
    AdamState state_b(n);
    std::vector<double> grads(n);
    std::vector<double> scaled(n);

    std::vector<double> prev_a(n, 0.0);
    std::vector<double> prev_b(n, 0.0);
    for (long t = 1; t <= 200; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            grads[i] = rng.normal();
            scaled[i] = 4.2 * grads[i];
        }
        adam_step(params_a, grads, state_a, t, cfg);
        adam_step(params_b, scaled, state_b, t, cfg);
        if (t > 100) { // past warm-up
            for (std::size_t i = 0; i < n; ++i) {
                const double da = params_a[i] - prev_a[i];
                const double db = params_b[i] - prev_b[i];
                CHECK(std::signbit(da) == std::signbit(db));
            }
        }
        prev_a = params_a;
        prev_b = params_b;
    }
}

TEST_CASE("adam rejects mismatched shapes") {
    TrainConfig cfg;
    std::vector<double> params{1.0, 2.0};
    std::vector<double> grads{1.0};
    AdamState state(2);
    CHECK(error_code_of([&] { adam_step(params, grads, state, 1, cfg); }) ==
          ErrorCode::shape_error);
}

TEST_CASE("accuracy counts matches") {
    CHECK(accuracy({true, true}, {true, true}) == 1.0);
    CHECK(accuracy({true, false}, {false, true}) == 0.0);
    CHECK(accuracy({true, true, false, false}, {true, true, true, false}) == 0.75);
    CHECK(error_code_of([&] { accuracy({}, {}); }) == ErrorCode::insufficient_data);
}

TEST_CASE("zero learning rate leaves the model untouched") {
    auto split = testsupport::make_separable_split(20, 10);
    ModelConfig mc{4, 1, 0.15, 10};
    auto model = init_model(mc, 1);
    const auto initial = model.params;

    TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 8;
    tc.learning_rate = 0.0;
    tc.seed = 3;
    auto outcome = train(model, split, tc);
    CHECK(outcome.model.params == initial);
}

TEST_CASE("separable fixture reaches 99% validation accuracy within two epochs") {
    auto split = testsupport::make_separable_split(200, 20);
    REQUIRE(!split.val.empty());
    ModelConfig mc{8, 1, 0.15, 20};
    TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 8;
    tc.learning_rate = 0.05;
    tc.seed = 12;
    auto outcome = train(init_model(mc, 34), split, tc);
    CHECK(outcome.report.val_accuracy.back() >= 0.99);
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
    auto split = testsupport::make_separable_split(30, 12);
    ModelConfig mc{5, 1, 0.15, 12};
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 8;
    tc.seed = 77;

    auto a = train(init_model(mc, 55), split, tc);
    auto b = train(init_model(mc, 55), split, tc);
    CHECK(a.model.params == b.model.params);
    CHECK(a.report.to_csv() == b.report.to_csv());
    CHECK(a.report.train_loss == b.report.train_loss);
    CHECK(a.report.val_accuracy == b.report.val_accuracy);
}

TEST_CASE("training loss decreases over five epochs on learnable data") {
    for (std::uint64_t seed : {11ULL, 22ULL, 33ULL}) {
        SynthParams p;
        p.m_ln = 1.0;
        p.sigma_ln = 0.9;
        p.beta_inv_s = 0.02;
        p.duration_s = 2000.0;
        p.sample_rate_hz = 2.0;
        p.seed = seed;
        auto series = generate_synthetic(p);
        WindowSpec spec{.alpha_db = 4.0, .delta_t_s = 5.0, .history_s = 0.0, .stride_samples = 4};
        auto split = prepare_dataset(series, spec, seed);

        ModelConfig mc{8, 1, 0.15, static_cast<int>(spec.window_len(p.sample_rate_hz))};
        TrainConfig tc;
        tc.seed = seed;
        auto outcome = train(init_model(mc, seed + 1), split, tc);
        REQUIRE(outcome.report.train_loss.size() == 5);
        CHECK(outcome.report.train_loss.back() < outcome.report.train_loss.front());
    }
}

TEST_CASE("optional gradient clipping caps the update size") {
    auto split = testsupport::make_separable_split(30, 10);
    ModelConfig mc{4, 1, 0.0, 10};
    TrainConfig tc;
    tc.epochs = 1;
    tc.batch_size = 8;
    tc.seed = 2;

    auto unclipped = train(init_model(mc, 6), split, tc);
    tc.max_grad_norm = 1e-9; // effectively freezes learning
    auto clipped = train(init_model(mc, 6), split, tc);
    const auto initial = init_model(mc, 6).params;

    double drift_clipped = 0.0;
    double drift_unclipped = 0.0;
    for (std::size_t i = 0; i < initial.size(); ++i) {
        drift_clipped = std::max(drift_clipped, std::abs(clipped.model.params[i] - initial[i]));
        drift_unclipped = std::max(drift_unclipped, std::abs(unclipped.model.params[i] - initial[i]));
    }
    CHECK(drift_clipped < drift_unclipped);
    CHECK(drift_clipped < 1e-3); // a few Adam steps on vanishingly small gradients

    tc.max_grad_norm = -1.0;
    CHECK(testsupport::error_code_of([&] { train(init_model(mc, 6), split, tc); }) ==
          ErrorCode::invalid_parameter);
}

TEST_CASE("training requires a non-empty training set") {
    SplitDataset split;
    TrainConfig tc;
    ModelConfig mc{4, 1, 0.15, 10};
    CHECK(error_code_of([&] { train(init_model(mc, 0), split, tc); }) ==
          ErrorCode::insufficient_data);
}

TEST_CASE("report csv has the pinned learning-curve columns") {
    auto split = testsupport::make_separable_split(20, 8);
    ModelConfig mc{4, 1, 0.0, 8};
    TrainConfig tc;
    tc.epochs = 2;
    tc.seed = 1;
    auto outcome = train(init_model(mc, 2), split, tc);
    const auto csv = outcome.report.to_csv();
    CHECK(csv.rfind("epoch,train_loss,val_loss,train_acc,val_acc\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3); // header + 2 epochs
}
