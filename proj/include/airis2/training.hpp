#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "airis2/dataset.hpp"
#include "airis2/detail/format.hpp"
#include "airis2/error.hpp"
#include "airis2/model.hpp"
#include "airis2/rng.hpp"

namespace airis2 {

struct TrainConfig {
    int epochs = 5;
    int batch_size = 64;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t seed = 0;
    std::optional<double> max_grad_norm; // off by default
};

inline void validate_config(const TrainConfig& config) {
    require(config.epochs >= 1, ErrorCode::invalid_parameter, "epochs must be >= 1");
    require(config.batch_size >= 1, ErrorCode::invalid_parameter, "batch_size must be >= 1");
    require(std::isfinite(config.learning_rate) && config.learning_rate >= 0.0,
            ErrorCode::invalid_parameter, "learning_rate must be >= 0");
    require(config.adam_beta1 >= 0.0 && config.adam_beta1 < 1.0, ErrorCode::invalid_parameter,
            "adam_beta1 must be in [0, 1)");
    require(config.adam_beta2 >= 0.0 && config.adam_beta2 < 1.0, ErrorCode::invalid_parameter,
            "adam_beta2 must be in [0, 1)");
    require(config.adam_epsilon > 0.0, ErrorCode::invalid_parameter, "adam_epsilon must be > 0");
    if (config.max_grad_norm)
        require(*config.max_grad_norm > 0.0, ErrorCode::invalid_parameter,
                "max_grad_norm must be > 0");
}

// Binary cross-entropy with the probability clamped to [1e-12, 1 - 1e-12].
inline double bce_loss(double probability, bool label) {
    const double p = std::clamp(probability, 1e-12, 1.0 - 1e-12);
    return label ? -std::log(p) : -std::log(1.0 - p);
}

struct AdamState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;

    explicit AdamState(std::size_t size = 0)
        : first_moment(size, 0.0), second_moment(size, 0.0) {}
};

// One bias-corrected Adam update; step t counts from 1.
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
                      long t, const TrainConfig& config) {
    require(params.size() == grads.size() && params.size() == state.first_moment.size() &&
                params.size() == state.second_moment.size(),
            ErrorCode::shape_error, "adam_step size mismatch");
    require(t >= 1, ErrorCode::invalid_parameter, "step index must be >= 1");

    const double b1 = config.adam_beta1;
    const double b2 = config.adam_beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        double& m = state.first_moment[i];
        double& v = state.second_moment[i];
        m = b1 * m + (1.0 - b1) * grads[i];
        v = b2 * v + (1.0 - b2) * grads[i] * grads[i];
        const double m_hat = m / correction1;
        const double v_hat = v / correction2;
        params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
    }
}

inline double accuracy(const std::vector<bool>& predictions, const std::vector<bool>& labels) {
    require(predictions.size() == labels.size(), ErrorCode::shape_error,
            "prediction/label length mismatch");
    require(!predictions.empty(), ErrorCode::insufficient_data, "empty prediction set");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] == labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

struct TrainReport {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::vector<double> train_accuracy;
    std::vector<double> val_accuracy;
    std::vector<double> epoch_seconds;

    // Learning-curve export; wall time stays out so the bytes are reproducible.
    std::string to_csv() const {
        std::ostringstream out;
        out << "epoch,train_loss,val_loss,train_acc,val_acc\n";
        for (std::size_t e = 0; e < train_loss.size(); ++e) {
            out << (e + 1) << ',' << detail::format_double(train_loss[e]) << ','
                << detail::format_double(val_loss[e]) << ','
                << detail::format_double(train_accuracy[e]) << ','
                << detail::format_double(val_accuracy[e]) << '\n';
        }
        return out.str();
    }
};

struct TrainOutcome {
    LstmClassifier model;
    TrainReport report;
};

// Mini-batch Adam on BCE. Shuffles per epoch, averages gradients over the
// batch (last batch may be short), applies dropout during the gradient
// forward, and evaluates validation in infer mode after each epoch.
// Sequential reduction order makes the result bit-reproducible per seed.
inline TrainOutcome train(LstmClassifier model, const SplitDataset& split, const TrainConfig& config) {
    validate_config(config);
    require(!split.train.empty(), ErrorCode::insufficient_data, "empty training set");
    for (const auto& w : split.train)
        require(w.features.size() == static_cast<std::size_t>(model.config.window_len) * model.input(),
                ErrorCode::shape_error, "training window length does not match model config");

    Rng rng(config.seed);
    AdamState adam(model.params.size());
    TrainReport report;

    std::vector<std::size_t> order(split.train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<double> grad(model.params.size());
    ForwardTrace trace;
    long step = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t hit_count = 0;
        for (std::size_t batch_start = 0; batch_start < order.size();
             batch_start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t batch_end =
                std::min(order.size(), batch_start + static_cast<std::size_t>(config.batch_size));
            const auto batch_count = static_cast<double>(batch_end - batch_start);

            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t i = batch_start; i < batch_end; ++i) {
                const LabeledWindow& window = split.train[order[i]];
                const double p = forward(model, window.features, RunMode::train, rng.next_u64(), trace);
                loss_sum += bce_loss(p, window.label);
                if ((p >= 0.5) == window.label) ++hit_count;
                backward(model, trace, window.label, grad);
            }
            for (double& g : grad) g /= batch_count;
            if (config.max_grad_norm) {
                double norm_sq = 0.0;
                for (double g : grad) norm_sq += g * g;
                const double norm = std::sqrt(norm_sq);
                if (norm > *config.max_grad_norm) {
                    const double scale = *config.max_grad_norm / norm;
                    for (double& g : grad) g *= scale;
                }
            }
            adam_step(model.params, grad, adam, ++step, config);
        }
        report.train_loss.push_back(loss_sum / static_cast<double>(order.size()));
        report.train_accuracy.push_back(static_cast<double>(hit_count) /
                                        static_cast<double>(order.size()));

        double val_loss = std::numeric_limits<double>::quiet_NaN();
        double val_acc = std::numeric_limits<double>::quiet_NaN();
        if (!split.val.empty()) {
            double vloss_sum = 0.0;
            std::size_t vhits = 0;
            for (const auto& window : split.val) {
                const double p = predict_probability(model, window.features);
                vloss_sum += bce_loss(p, window.label);
                if ((p >= 0.5) == window.label) ++vhits;
            }
            val_loss = vloss_sum / static_cast<double>(split.val.size());
            val_acc = static_cast<double>(vhits) / static_cast<double>(split.val.size());
        }
        report.val_loss.push_back(val_loss);
        report.val_accuracy.push_back(val_acc);

        const auto elapsed = std::chrono::steady_clock::now() - started;
        report.epoch_seconds.push_back(std::chrono::duration<double>(elapsed).count());
    }
    return {std::move(model), std::move(report)};
}

} // namespace airis2
