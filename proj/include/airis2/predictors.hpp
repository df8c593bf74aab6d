#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "airis2/dataset.hpp"
#include "airis2/detail/format.hpp"
#include "airis2/error.hpp"
#include "airis2/model.hpp"
#include "airis2/timeseries.hpp"

namespace airis2 {

struct Prediction {
    bool event_predicted = false;
    double probability = 0.0;
    std::ptrdiff_t anchor_index = -1;
};

// Persistence hypothesis: the channel is frozen over the horizon, so a fade
// at t + delta_t is predicted iff the current attenuation already exceeds alpha.
inline Prediction persistence_predict(double attenuation_db, double alpha_db,
                                      std::ptrdiff_t anchor_index = -1) {
    require(std::isfinite(attenuation_db), ErrorCode::value_error, "non-finite attenuation");
    const bool event = attenuation_db > alpha_db;
    return {event, event ? 1.0 : 0.0, anchor_index};
}

// Learned predictor: infer-mode probability, decision at `probability >= threshold`.
// The window must already be normalized with the stats stored alongside the model.
inline Prediction airis2_predict(const LstmClassifier& model, std::span<const double> normalized_window,
                                 double threshold = 0.5, std::ptrdiff_t anchor_index = -1) {
    const double p = predict_probability(model, normalized_window);
    return {p >= threshold, p, anchor_index};
}

// Clairvoyant predictor: reads the future sample. Used as the policy bound in
// the switching simulator and as a consistency oracle in tests.
inline Prediction oracle_predict(const AttenuationSeries& series, std::size_t anchor_index,
                                 double alpha_db, double delta_t_s) {
    const auto horizon =
        static_cast<std::size_t>(std::llround(delta_t_s * series.sample_rate_hz));
    if (anchor_index >= series.size() || anchor_index + horizon >= series.size())
        throw_error(ErrorCode::range_error, "horizon extends past the series end");
    const bool event = series.values[anchor_index + horizon] > alpha_db;
    return {event, event ? 1.0 : 0.0, static_cast<std::ptrdiff_t>(anchor_index)};
}

inline constexpr const char* kPredictionsCsvHeader = "anchor_index,probability,predicted,label";

inline std::string render_predictions_csv(const std::vector<Prediction>& predictions,
                                          const std::vector<bool>& labels) {
    require(predictions.size() == labels.size(), ErrorCode::shape_error,
            "prediction/label length mismatch");
    std::ostringstream out;
    out << kPredictionsCsvHeader << '\n';
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        out << predictions[i].anchor_index << ',' << detail::format_double(predictions[i].probability)
            << ',' << (predictions[i].event_predicted ? 1 : 0) << ',' << (labels[i] ? 1 : 0) << '\n';
    }
    return out.str();
}

} // namespace airis2
