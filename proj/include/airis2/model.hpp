#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "airis2/dataset.hpp"
#include "airis2/error.hpp"
#include "airis2/rng.hpp"

namespace airis2 {

struct ModelConfig {
    int hidden_size = 50;
    int input_dim = 1;
    double dropout_rate = 0.15;
    int window_len = 0;

    std::size_t parameter_count() const {
        const auto h = static_cast<std::size_t>(hidden_size);
        const auto in = static_cast<std::size_t>(input_dim);
        return 4 * (h * (in + h) + h) + h + 1;
    }
};

inline void validate_config(const ModelConfig& config) {
    require(config.hidden_size >= 1, ErrorCode::invalid_parameter, "hidden_size must be >= 1");
    require(config.input_dim >= 1, ErrorCode::invalid_parameter, "input_dim must be >= 1");
    require(config.dropout_rate >= 0.0 && config.dropout_rate < 1.0,
            ErrorCode::invalid_parameter, "dropout_rate must be in [0, 1)");
    require(config.window_len >= 1, ErrorCode::invalid_parameter, "window_len must be >= 1");
}

namespace gate {
inline constexpr int input = 0;
inline constexpr int forget = 1;
inline constexpr int output = 2;
inline constexpr int candidate = 3;
} // namespace gate

// LSTM + dense-sigmoid classifier. All parameters live in one flat vector so
// the optimizer, serialization and gradient checks can treat them uniformly.
// Layout: W[4] (hidden x input, row-major), U[4] (hidden x hidden), b[4],
// dense weight (hidden), dense bias (1); gate order input/forget/output/candidate.
struct LstmClassifier {
    ModelConfig config;
    std::vector<double> params;

    std::size_t w_offset(int g) const {
        return static_cast<std::size_t>(g) * hidden() * input();
    }
    std::size_t u_offset(int g) const {
        return 4 * hidden() * input() + static_cast<std::size_t>(g) * hidden() * hidden();
    }
    std::size_t b_offset(int g) const {
        return 4 * hidden() * (input() + hidden()) + static_cast<std::size_t>(g) * hidden();
    }
    std::size_t dense_w_offset() const { return 4 * hidden() * (input() + hidden() + 1); }
    std::size_t dense_b_offset() const { return dense_w_offset() + hidden(); }

    std::span<const double> input_weights(int g) const { return {params.data() + w_offset(g), hidden() * input()}; }
    std::span<const double> recurrent_weights(int g) const { return {params.data() + u_offset(g), hidden() * hidden()}; }
    std::span<const double> biases(int g) const { return {params.data() + b_offset(g), hidden()}; }
    std::span<const double> dense_weights() const { return {params.data() + dense_w_offset(), hidden()}; }
    double dense_bias() const { return params[dense_b_offset()]; }

    std::size_t hidden() const { return static_cast<std::size_t>(config.hidden_size); }
    std::size_t input() const { return static_cast<std::size_t>(config.input_dim); }
};

// Glorot-uniform weights, zero biases except the forget gate at 1.
inline LstmClassifier init_model(const ModelConfig& config, std::uint64_t seed) {
    validate_config(config);
    LstmClassifier model;
    model.config = config;
    model.params.assign(config.parameter_count(), 0.0);

    const auto h = model.hidden();
    const auto in = model.input();
    Rng rng(seed);
    const double w_bound = std::sqrt(6.0 / static_cast<double>(in + h));
    const double u_bound = std::sqrt(6.0 / static_cast<double>(2 * h));
    const double d_bound = std::sqrt(6.0 / static_cast<double>(h + 1));

    for (int g = 0; g < 4; ++g) {
        double* w = model.params.data() + model.w_offset(g);
        for (std::size_t i = 0; i < h * in; ++i) w[i] = rng.uniform(-w_bound, w_bound);
    }
    for (int g = 0; g < 4; ++g) {
        double* u = model.params.data() + model.u_offset(g);
        for (std::size_t i = 0; i < h * h; ++i) u[i] = rng.uniform(-u_bound, u_bound);
    }
    double* bf = model.params.data() + model.b_offset(gate::forget);
    for (std::size_t i = 0; i < h; ++i) bf[i] = 1.0;
    double* wd = model.params.data() + model.dense_w_offset();
    for (std::size_t i = 0; i < h; ++i) wd[i] = rng.uniform(-d_bound, d_bound);
    return model;
}

enum class RunMode { train, infer };

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

inline constexpr double kNormEpsilon = 1e-5;

// Everything backpropagation-through-time needs from one forward pass.
// Per-step histories are recorded in train mode only.
struct ForwardTrace {
    bool recorded = false;
    std::size_t steps = 0;
    std::size_t hidden = 0;

    std::vector<double> inputs;       // steps x input_dim
    std::vector<double> gate_i;       // steps x hidden, post-activation
    std::vector<double> gate_f;
    std::vector<double> gate_o;
    std::vector<double> gate_g;
    std::vector<double> cell;         // c_t
    std::vector<double> cell_tanh;    // tanh(c_t)
    std::vector<double> hidden_state; // h_t

    std::vector<double> final_mean_centered; // h_L - mean
    double feature_std = 0.0;                // population std of h_L
    std::vector<double> normalized;          // z before dropout
    std::vector<double> dropout_scale;       // 0 or 1/keep per feature
    std::vector<double> dropped;             // z after dropout
    double logit = 0.0;
    double probability = 0.0;

    // scratch state reused across calls
    std::vector<double> h_state;
    std::vector<double> c_state;
    std::vector<double> preact;
};

// LSTM recurrence over the window, layer standardization of the final hidden
// state (mean/std + epsilon), inverted dropout in train mode, dense sigmoid.
inline double forward(const LstmClassifier& model, std::span<const double> features,
                      RunMode mode, std::uint64_t dropout_seed, ForwardTrace& trace) {
    const auto h = model.hidden();
    const auto in = model.input();
    const auto steps = static_cast<std::size_t>(model.config.window_len);
    if (features.size() != steps * in)
        throw_error(ErrorCode::shape_error,
                    "expected " + std::to_string(steps * in) + " feature values, got " +
                        std::to_string(features.size()));
    for (double v : features)
        require(std::isfinite(v), ErrorCode::numeric_error, "non-finite feature value");

    const bool record = (mode == RunMode::train);
    trace.recorded = record;
    trace.steps = steps;
    trace.hidden = h;
    if (record) {
        trace.inputs.assign(features.begin(), features.end());
        trace.gate_i.resize(steps * h);
        trace.gate_f.resize(steps * h);
        trace.gate_o.resize(steps * h);
        trace.gate_g.resize(steps * h);
        trace.cell.resize(steps * h);
        trace.cell_tanh.resize(steps * h);
        trace.hidden_state.resize(steps * h);
    }
    trace.h_state.assign(h, 0.0);
    trace.c_state.assign(h, 0.0);
    trace.preact.resize(4 * h);

    const double* w[4];
    const double* u[4];
    const double* b[4];
    for (int g = 0; g < 4; ++g) {
        w[g] = model.params.data() + model.w_offset(g);
        u[g] = model.params.data() + model.u_offset(g);
        b[g] = model.params.data() + model.b_offset(g);
    }

    for (std::size_t t = 0; t < steps; ++t) {
        const double* x = features.data() + t * in;
        for (int g = 0; g < 4; ++g) {
            double* pre = trace.preact.data() + static_cast<std::size_t>(g) * h;
            const double* wg = w[g];
            const double* ug = u[g];
            for (std::size_t r = 0; r < h; ++r) {
                double acc = b[g][r];
                const double* wrow = wg + r * in;
                for (std::size_t c = 0; c < in; ++c) acc += wrow[c] * x[c];
                const double* urow = ug + r * h;
                const double* hp = trace.h_state.data();
                for (std::size_t c = 0; c < h; ++c) acc += urow[c] * hp[c];
                pre[r] = acc;
            }
        }
        for (std::size_t r = 0; r < h; ++r) {
            const double gi = sigmoid(trace.preact[0 * h + r]);
            const double gf = sigmoid(trace.preact[1 * h + r]);
            const double go = sigmoid(trace.preact[2 * h + r]);
            const double gg = std::tanh(trace.preact[3 * h + r]);
            const double c_new = gf * trace.c_state[r] + gi * gg;
            const double c_tanh = std::tanh(c_new);
            const double h_new = go * c_tanh;
            if (record) {
                trace.gate_i[t * h + r] = gi;
                trace.gate_f[t * h + r] = gf;
                trace.gate_o[t * h + r] = go;
                trace.gate_g[t * h + r] = gg;
                trace.cell[t * h + r] = c_new;
                trace.cell_tanh[t * h + r] = c_tanh;
                trace.hidden_state[t * h + r] = h_new;
            }
            trace.c_state[r] = c_new;
            trace.h_state[r] = h_new;
        }
    }

    double mean = 0.0;
    for (double v : trace.h_state) mean += v;
    mean /= static_cast<double>(h);
    trace.final_mean_centered.resize(h);
    double var = 0.0;
    for (std::size_t r = 0; r < h; ++r) {
        trace.final_mean_centered[r] = trace.h_state[r] - mean;
        var += trace.final_mean_centered[r] * trace.final_mean_centered[r];
    }
    var /= static_cast<double>(h);
    trace.feature_std = std::sqrt(var);
    const double denom = trace.feature_std + kNormEpsilon;

    trace.normalized.resize(h);
    for (std::size_t r = 0; r < h; ++r) trace.normalized[r] = trace.final_mean_centered[r] / denom;

    trace.dropout_scale.assign(h, 1.0);
    if (record && model.config.dropout_rate > 0.0) {
        Rng rng(dropout_seed);
        const double keep = 1.0 - model.config.dropout_rate;
        for (std::size_t r = 0; r < h; ++r)
            trace.dropout_scale[r] = (rng.uniform01() < model.config.dropout_rate) ? 0.0 : 1.0 / keep;
    }
    trace.dropped.resize(h);
    for (std::size_t r = 0; r < h; ++r) trace.dropped[r] = trace.normalized[r] * trace.dropout_scale[r];

    const double* wd = model.params.data() + model.dense_w_offset();
    double logit = model.params[model.dense_b_offset()];
    for (std::size_t r = 0; r < h; ++r) logit += wd[r] * trace.dropped[r];
    trace.logit = logit;
    trace.probability = sigmoid(logit);
    return trace.probability;
}

inline std::pair<double, ForwardTrace> forward(const LstmClassifier& model,
                                               std::span<const double> features,
                                               RunMode mode, std::uint64_t dropout_seed = 0) {
    ForwardTrace trace;
    double p = forward(model, features, mode, dropout_seed, trace);
    return {p, std::move(trace)};
}

inline double predict_probability(const LstmClassifier& model, std::span<const double> features) {
    thread_local ForwardTrace trace;
    return forward(model, features, RunMode::infer, 0, trace);
}

// Exact BCE gradients through the dense head, dropout mask, standardization
// Jacobian and the unrolled recurrence. Accumulates into grad (+=), which
// must match the parameter layout.
inline void backward(const LstmClassifier& model, const ForwardTrace& trace, bool label,
                     std::span<double> grad) {
    require(trace.recorded, ErrorCode::invalid_parameter, "backward needs a train-mode trace");
    require(grad.size() == model.params.size(), ErrorCode::shape_error, "gradient size mismatch");

    const auto h = model.hidden();
    const auto in = model.input();
    const auto steps = trace.steps;

    const double dlogit = trace.probability - (label ? 1.0 : 0.0);

    double* g_wd = grad.data() + model.dense_w_offset();
    for (std::size_t r = 0; r < h; ++r) g_wd[r] += dlogit * trace.dropped[r];
    grad[model.dense_b_offset()] += dlogit;

    // through dropout onto the standardized features
    std::vector<double> dz(h);
    const double* wd = model.params.data() + model.dense_w_offset();
    for (std::size_t r = 0; r < h; ++r) dz[r] = dlogit * wd[r] * trace.dropout_scale[r];

    // standardization Jacobian: z = (h - mean) / (std + eps)
    const double denom = trace.feature_std + kNormEpsilon;
    double dz_mean = 0.0;
    double dz_dot_u = 0.0;
    for (std::size_t r = 0; r < h; ++r) {
        dz_mean += dz[r];
        dz_dot_u += dz[r] * trace.final_mean_centered[r];
    }
    dz_mean /= static_cast<double>(h);
    std::vector<double> dh(h);
    const double n = static_cast<double>(h);
    for (std::size_t r = 0; r < h; ++r) {
        double val = (dz[r] - dz_mean) / denom;
        if (trace.feature_std > 0.0)
            val -= trace.final_mean_centered[r] * dz_dot_u / (denom * denom * n * trace.feature_std);
        dh[r] = val;
    }

    double* gw[4];
    double* gu[4];
    double* gb[4];
    const double* u[4];
    for (int g = 0; g < 4; ++g) {
        gw[g] = grad.data() + model.w_offset(g);
        gu[g] = grad.data() + model.u_offset(g);
        gb[g] = grad.data() + model.b_offset(g);
        u[g] = model.params.data() + model.u_offset(g);
    }

    std::vector<double> dc(h, 0.0);
    std::vector<double> dh_prev(h);
    std::vector<double> da(4 * h);
    for (std::size_t t = steps; t-- > 0;) {
        const double* gi = trace.gate_i.data() + t * h;
        const double* gf = trace.gate_f.data() + t * h;
        const double* go = trace.gate_o.data() + t * h;
        const double* gg = trace.gate_g.data() + t * h;
        const double* ct = trace.cell_tanh.data() + t * h;
        const double* c_prev = (t > 0) ? trace.cell.data() + (t - 1) * h : nullptr;
        const double* h_prev = (t > 0) ? trace.hidden_state.data() + (t - 1) * h : nullptr;
        const double* x = trace.inputs.data() + t * in;

        for (std::size_t r = 0; r < h; ++r) {
            const double dht = dh[r];
            const double d_out = dht * ct[r];
            double dct = dc[r] + dht * go[r] * (1.0 - ct[r] * ct[r]);
            const double d_in = dct * gg[r];
            const double d_cand = dct * gi[r];
            const double d_forget = dct * (c_prev ? c_prev[r] : 0.0);
            dc[r] = dct * gf[r];
            da[gate::input * h + r] = d_in * gi[r] * (1.0 - gi[r]);
            da[gate::forget * h + r] = d_forget * gf[r] * (1.0 - gf[r]);
            da[gate::output * h + r] = d_out * go[r] * (1.0 - go[r]);
            da[gate::candidate * h + r] = d_cand * (1.0 - gg[r] * gg[r]);
        }

        for (int g = 0; g < 4; ++g) {
            const double* dag = da.data() + static_cast<std::size_t>(g) * h;
            for (std::size_t r = 0; r < h; ++r) {
                const double d = dag[r];
                gb[g][r] += d;
                double* wrow = gw[g] + r * in;
                for (std::size_t c = 0; c < in; ++c) wrow[c] += d * x[c];
                if (h_prev) {
                    double* urow = gu[g] + r * h;
                    for (std::size_t c = 0; c < h; ++c) urow[c] += d * h_prev[c];
                }
            }
        }

        if (t > 0) {
            std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
            for (int g = 0; g < 4; ++g) {
                const double* dag = da.data() + static_cast<std::size_t>(g) * h;
                const double* ug = u[g];
                for (std::size_t r = 0; r < h; ++r) {
                    const double d = dag[r];
                    const double* urow = ug + r * h;
                    for (std::size_t c = 0; c < h; ++c) dh_prev[c] += d * urow[c];
                }
            }
            dh = dh_prev;
        }
    }
}

inline std::vector<double> backward(const LstmClassifier& model, const ForwardTrace& trace, bool label) {
    std::vector<double> grad(model.params.size(), 0.0);
    backward(model, trace, label, grad);
    return grad;
}

inline constexpr const char* kModelFormat = "airis2-model";
inline constexpr int kModelVersion = 1;

// Model container: config, flat parameters and (optionally) the input
// normalization the model was trained with. Values round-trip exactly.
inline std::string serialize_model(const LstmClassifier& model,
                                   const std::optional<NormalizationStats>& norm = std::nullopt) {
    nlohmann::json doc;
    doc["format"] = kModelFormat;
    doc["version"] = kModelVersion;
    doc["config"] = {{"hidden_size", model.config.hidden_size},
                     {"input_dim", model.config.input_dim},
                     {"dropout_rate", model.config.dropout_rate},
                     {"window_len", model.config.window_len}};
    doc["params"] = model.params;
    if (norm)
        doc["norm"] = {{"mean_db", norm->mean_db}, {"std_db", norm->std_db}};
    else
        doc["norm"] = nullptr;
    return doc.dump();
}

inline std::pair<LstmClassifier, std::optional<NormalizationStats>>
deserialize_model(const std::string& bytes) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::exception& e) {
        throw_error(ErrorCode::format_error, std::string("model payload unreadable: ") + e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != kModelFormat)
            throw_error(ErrorCode::format_error, "not a model file");
        if (doc.at("version").get<int>() != kModelVersion)
            throw_error(ErrorCode::format_error, "unsupported model version");
        LstmClassifier model;
        const auto& cfg = doc.at("config");
        model.config.hidden_size = cfg.at("hidden_size").get<int>();
        model.config.input_dim = cfg.at("input_dim").get<int>();
        model.config.dropout_rate = cfg.at("dropout_rate").get<double>();
        model.config.window_len = cfg.at("window_len").get<int>();
        validate_config(model.config);
        model.params = doc.at("params").get<std::vector<double>>();
        if (model.params.size() != model.config.parameter_count())
            throw_error(ErrorCode::format_error, "parameter payload truncated or padded");
        for (double v : model.params)
            require(std::isfinite(v), ErrorCode::format_error, "non-finite parameter");
        std::optional<NormalizationStats> norm;
        if (!doc.at("norm").is_null()) {
            norm = NormalizationStats{doc.at("norm").at("mean_db").get<double>(),
                                      doc.at("norm").at("std_db").get<double>()};
        }
        return {std::move(model), norm};
    } catch (const nlohmann::json::exception& e) {
        throw_error(ErrorCode::format_error, std::string("model payload malformed: ") + e.what());
    }
}

} // namespace airis2
