#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "airis2/error.hpp"
#include "airis2/rng.hpp"
#include "airis2/timeseries.hpp"

namespace airis2 {

// Windowing parameters: event threshold alpha, prediction horizon delta_t and
// history length H. history_s <= 0 selects the default rule H = 2 * delta_t.
struct WindowSpec {
    double alpha_db = 5.0;
    double delta_t_s = 60.0;
    double history_s = 0.0;
    std::size_t stride_samples = 1;

    double effective_history_s() const {
        return history_s > 0.0 ? history_s : 2.0 * delta_t_s;
    }
    // Window covers [t - H, t] with both endpoints included.
    std::size_t window_len(double sample_rate_hz) const {
        return static_cast<std::size_t>(std::llround(effective_history_s() * sample_rate_hz)) + 1;
    }
    std::size_t horizon_samples(double sample_rate_hz) const {
        return static_cast<std::size_t>(std::llround(delta_t_s * sample_rate_hz));
    }
};

inline void validate_spec(const WindowSpec& spec) {
    require(std::isfinite(spec.alpha_db) && spec.alpha_db > 0.0,
            ErrorCode::invalid_parameter, "alpha_db must be > 0");
    require(std::isfinite(spec.delta_t_s) && spec.delta_t_s > 0.0,
            ErrorCode::invalid_parameter, "delta_t_s must be > 0");
    require(spec.history_s == 0.0 || (std::isfinite(spec.history_s) && spec.history_s > 0.0),
            ErrorCode::invalid_parameter, "history_s must be > 0 (or 0 for the 2x rule)");
    require(spec.stride_samples >= 1, ErrorCode::invalid_parameter, "stride_samples must be >= 1");
}

// One training example: the past attenuation trace ending at the anchor
// sample (oldest first) and the fade-event truth at anchor + horizon.
struct LabeledWindow {
    std::vector<double> features;
    bool label = false;
    std::size_t anchor_index = 0;
};

struct NormalizationStats {
    double mean_db = 0.0;
    double std_db = 1.0;
};

struct SplitDataset {
    std::vector<LabeledWindow> train;
    std::vector<LabeledWindow> val;
    std::vector<LabeledWindow> test;
    NormalizationStats norm;
};

// Slices the series into labeled windows. Anchors start at the first index
// with a full history behind it and stop where the horizon still lies inside
// the series; label is the strict threshold test at anchor + horizon.
inline std::vector<LabeledWindow> make_windows(const AttenuationSeries& series, const WindowSpec& spec) {
    validate_spec(spec);
    validate_series(series);
    const std::size_t len = spec.window_len(series.sample_rate_hz);
    const std::size_t horizon = spec.horizon_samples(series.sample_rate_hz);
    require(horizon >= 1, ErrorCode::invalid_parameter, "delta_t_s shorter than one sample");
    if (series.size() < len + horizon)
        throw_error(ErrorCode::insufficient_data,
                    "series of " + std::to_string(series.size()) + " samples cannot fit window of " +
                        std::to_string(len) + " plus horizon of " + std::to_string(horizon));

    std::vector<LabeledWindow> windows;
    const std::size_t first_anchor = len - 1;
    const std::size_t last_anchor = series.size() - 1 - horizon;
    windows.reserve((last_anchor - first_anchor) / spec.stride_samples + 1);
    for (std::size_t anchor = first_anchor; anchor <= last_anchor; anchor += spec.stride_samples) {
        LabeledWindow w;
        w.anchor_index = anchor;
        w.features.assign(series.values.begin() + static_cast<std::ptrdiff_t>(anchor - (len - 1)),
                          series.values.begin() + static_cast<std::ptrdiff_t>(anchor + 1));
        w.label = series.values[anchor + horizon] > spec.alpha_db;
        windows.push_back(std::move(w));
    }
    return windows;
}

inline constexpr std::array<double, 3> kDefaultFractions{0.70, 0.15, 0.15};

// Random permutation then contiguous assignment [train | val | test].
// Val/test sizes are floored; the remainder goes to train.
inline SplitDataset split_random(std::vector<LabeledWindow> windows,
                                 const std::array<double, 3>& fractions,
                                 std::uint64_t seed) {
    require(!windows.empty(), ErrorCode::insufficient_data, "no windows to split");
    double sum = fractions[0] + fractions[1] + fractions[2];
    require(std::abs(sum - 1.0) <= 1e-9, ErrorCode::invalid_parameter, "fractions must sum to 1");
    for (double f : fractions)
        require(f >= 0.0, ErrorCode::invalid_parameter, "fractions must be non-negative");

    Rng rng(seed);
    rng.shuffle(windows);

    const std::size_t n = windows.size();
    const auto n_val = static_cast<std::size_t>(std::floor(fractions[1] * static_cast<double>(n)));
    const auto n_test = static_cast<std::size_t>(std::floor(fractions[2] * static_cast<double>(n)));
    const std::size_t n_train = n - n_val - n_test;

    SplitDataset split;
    split.train.assign(std::make_move_iterator(windows.begin()),
                       std::make_move_iterator(windows.begin() + static_cast<std::ptrdiff_t>(n_train)));
    split.val.assign(std::make_move_iterator(windows.begin() + static_cast<std::ptrdiff_t>(n_train)),
                     std::make_move_iterator(windows.begin() + static_cast<std::ptrdiff_t>(n_train + n_val)));
    split.test.assign(std::make_move_iterator(windows.begin() + static_cast<std::ptrdiff_t>(n_train + n_val)),
                      std::make_move_iterator(windows.end()));
    return split;
}

// Undersamples the majority class to the minority count, then reshuffles.
// Never fabricates windows: the output is a sub-multiset of the input.
inline std::vector<LabeledWindow> balance(std::vector<LabeledWindow> windows, std::uint64_t seed) {
    std::vector<LabeledWindow> positive;
    std::vector<LabeledWindow> negative;
    for (auto& w : windows)
        (w.label ? positive : negative).push_back(std::move(w));
    if (positive.empty() || negative.empty())
        throw_error(ErrorCode::single_class,
                    positive.empty() ? "no positive windows (widen data or lower alpha)"
                                     : "no negative windows (widen data or raise alpha)");

    Rng rng(seed);
    rng.shuffle(positive);
    rng.shuffle(negative);
    const std::size_t keep = std::min(positive.size(), negative.size());
    positive.resize(keep);
    negative.resize(keep);

    std::vector<LabeledWindow> balanced;
    balanced.reserve(2 * keep);
    std::move(positive.begin(), positive.end(), std::back_inserter(balanced));
    std::move(negative.begin(), negative.end(), std::back_inserter(balanced));
    rng.shuffle(balanced);
    return balanced;
}

// Scalar mean/std over every feature value of the training windows.
inline NormalizationStats fit_normalization(const std::vector<LabeledWindow>& train_windows) {
    require(!train_windows.empty(), ErrorCode::insufficient_data, "no training windows");
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& w : train_windows) {
        for (double v : w.features) sum += v;
        count += w.features.size();
    }
    require(count > 0, ErrorCode::insufficient_data, "training windows have no features");
    const double mean = sum / static_cast<double>(count);
    double sq = 0.0;
    for (const auto& w : train_windows)
        for (double v : w.features) sq += (v - mean) * (v - mean);
    const double stddev = std::sqrt(sq / static_cast<double>(count));
    if (!(stddev > 0.0))
        throw_error(ErrorCode::degenerate_data, "training features have zero variance");
    return NormalizationStats{mean, stddev};
}

inline LabeledWindow apply_normalization(LabeledWindow window, const NormalizationStats& stats) {
    for (double& v : window.features) v = (v - stats.mean_db) / stats.std_db;
    return window;
}

inline void apply_normalization(std::vector<LabeledWindow>& windows, const NormalizationStats& stats) {
    for (auto& w : windows)
        for (double& v : w.features) v = (v - stats.mean_db) / stats.std_db;
}

// Full preparation pipeline: window -> split -> balance train and val ->
// fit normalization on the balanced train set -> normalize all three splits.
// The test split keeps its natural class distribution.
inline SplitDataset prepare_dataset(const AttenuationSeries& series, const WindowSpec& spec,
                                    std::uint64_t seed,
                                    const std::array<double, 3>& fractions = kDefaultFractions) {
    auto windows = make_windows(series, spec);
    auto split = split_random(std::move(windows), fractions, mix_seed(seed, 1));
    split.train = balance(std::move(split.train), mix_seed(seed, 2));
    if (!split.val.empty()) split.val = balance(std::move(split.val), mix_seed(seed, 3));
    split.norm = fit_normalization(split.train);
    apply_normalization(split.train, split.norm);
    apply_normalization(split.val, split.norm);
    apply_normalization(split.test, split.norm);
    return split;
}

} // namespace airis2
