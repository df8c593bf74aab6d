#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "airis2/dataset.hpp"
#include "airis2/error.hpp"
#include "airis2/timeseries.hpp"

namespace testsupport {

inline bool within(double value, double expected, double tolerance) {
    return std::abs(value - expected) <= tolerance;
}

template <typename Fn>
airis2::ErrorCode error_code_of(Fn&& fn) {
    try {
        fn();
    } catch (const airis2::Error& e) {
        return e.code();
    }
    throw std::runtime_error("expected airis2::Error, nothing was thrown");
}

// Sample autocorrelation at the given lag.
inline double autocorrelation(const std::vector<double>& xs, std::size_t lag) {
    const std::size_t n = xs.size();
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(n);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) den += (xs[i] - mean) * (xs[i] - mean);
    for (std::size_t i = 0; i + lag < n; ++i) num += (xs[i] - mean) * (xs[i + lag] - mean);
    return num / den;
}

// Independent labeling oracle: direct future-threshold scan, no shared code
// with make_windows.
inline std::vector<bool> brute_force_labels(const airis2::AttenuationSeries& series,
                                            double alpha_db, std::size_t horizon_samples,
                                            const std::vector<std::size_t>& anchors) {
    std::vector<bool> labels;
    labels.reserve(anchors.size());
    for (std::size_t anchor : anchors)
        labels.push_back(series.values.at(anchor + horizon_samples) > alpha_db);
    return labels;
}

// Perfectly separable two-class window set: negatives sit at low_db, positives
// at high_db, both constant across the window.
inline airis2::SplitDataset make_separable_split(std::size_t per_class, std::size_t window_len,
                                                 double low_db = 0.0, double high_db = 20.0) {
    using airis2::LabeledWindow;
    std::vector<LabeledWindow> windows;
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
        LabeledWindow w;
        w.anchor_index = i;
        w.label = (i % 2 == 1);
        w.features.assign(window_len, w.label ? high_db : low_db);
        windows.push_back(std::move(w));
    }
    auto split = airis2::split_random(std::move(windows), airis2::kDefaultFractions, 7);
    split.train = airis2::balance(std::move(split.train), 11);
    if (!split.val.empty()) split.val = airis2::balance(std::move(split.val), 13);
    split.norm = airis2::fit_normalization(split.train);
    airis2::apply_normalization(split.train, split.norm);
    airis2::apply_normalization(split.val, split.norm);
    airis2::apply_normalization(split.test, split.norm);
    return split;
}

} // namespace testsupport
