#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "airis2/detail/format.hpp"
#include "airis2/error.hpp"
#include "airis2/rng.hpp"

namespace airis2 {

// Uniformly sampled excess-attenuation record for one gateway.
// Values are dB above clear sky; timestamps are implied by index.
struct AttenuationSeries {
    std::string gateway_id;
    double sample_rate_hz = 10.0;
    double start_time_s = 0.0;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double time_at(std::size_t index) const {
        return start_time_s + static_cast<double>(index) / sample_rate_hz;
    }
};

inline void validate_series(const AttenuationSeries& series) {
    require(series.sample_rate_hz > 0.0 && std::isfinite(series.sample_rate_hz),
            ErrorCode::invalid_parameter, "sample_rate_hz must be positive");
    require(!series.values.empty(), ErrorCode::empty_input, "series has no samples");
    for (double v : series.values) {
        require(std::isfinite(v), ErrorCode::value_error, "non-finite attenuation sample");
        require(v >= 0.0, ErrorCode::value_error, "negative attenuation sample");
    }
}

// Lognormal first-order Gauss-Markov synthesis parameters.
//
// The latent process x has unit stationary variance and per-sample
// correlation rho = exp(-beta_inv_s / sample_rate_hz); the emitted sample is
// A = exp(m_ln + sigma_ln * x) + offset_db. The pre-offset exceedance
// probability is therefore analytic: P[A - offset > a] = Q((ln a - m_ln) / sigma_ln).
struct SynthParams {
    double m_ln = 0.0;
    double sigma_ln = 1.0;
    double beta_inv_s = 0.1;
    double duration_s = 0.0;
    double sample_rate_hz = 10.0;
    double offset_db = 0.0;
    std::uint64_t seed = 0;
    std::string gateway_id = "synthetic";
};

inline void validate_params(const SynthParams& params) {
    require(std::isfinite(params.m_ln), ErrorCode::invalid_parameter, "m_ln must be finite");
    require(std::isfinite(params.sigma_ln) && params.sigma_ln >= 0.0,
            ErrorCode::invalid_parameter, "sigma_ln must be >= 0");
    require(std::isfinite(params.beta_inv_s) && params.beta_inv_s > 0.0,
            ErrorCode::invalid_parameter, "beta_inv_s must be > 0");
    require(std::isfinite(params.duration_s) && params.duration_s > 0.0,
            ErrorCode::invalid_parameter, "duration_s must be > 0");
    require(std::isfinite(params.sample_rate_hz) && params.sample_rate_hz > 0.0,
            ErrorCode::invalid_parameter, "sample_rate_hz must be > 0");
    require(std::isfinite(params.offset_db) && params.offset_db >= 0.0,
            ErrorCode::invalid_parameter, "offset_db must be >= 0");
}

// Deterministic synthetic series; stationary from the first sample
// (x_0 is drawn from the stationary distribution).
inline AttenuationSeries generate_synthetic(const SynthParams& params) {
    validate_params(params);
    auto count = static_cast<std::size_t>(std::llround(params.duration_s * params.sample_rate_hz));
    require(count >= 1, ErrorCode::invalid_parameter, "duration too short for one sample");

    double rho = std::exp(-params.beta_inv_s / params.sample_rate_hz);
    double innovation = std::sqrt(1.0 - rho * rho);

    AttenuationSeries series;
    series.gateway_id = params.gateway_id;
    series.sample_rate_hz = params.sample_rate_hz;
    series.values.resize(count);

    Rng rng(params.seed);
    double x = rng.normal();
    series.values[0] = std::exp(params.m_ln + params.sigma_ln * x) + params.offset_db;
    for (std::size_t k = 1; k < count; ++k) {
        x = rho * x + innovation * rng.normal();
        series.values[k] = std::exp(params.m_ln + params.sigma_ln * x) + params.offset_db;
    }
    return series;
}

inline constexpr const char* kSeriesCsvHeader = "timestamp_s,attenuation_db";

// CSV ingest: header `timestamp_s,attenuation_db`, one sample per line.
// The sample rate is inferred from the median timestamp spacing; rows must be
// uniformly spaced within 1% relative jitter. A single-row file falls back to
// the 10 Hz default since no spacing exists to infer from.
inline AttenuationSeries ingest_csv(std::istream& source, const std::string& gateway_id = "ingested") {
    std::string line;
    if (!std::getline(source, line))
        throw_error(ErrorCode::format_error, "missing header line");
    if (detail::trim(line) != kSeriesCsvHeader)
        throw_error(ErrorCode::format_error, "expected header '" + std::string(kSeriesCsvHeader) + "'");

    std::vector<double> timestamps;
    std::vector<double> values;
    std::size_t line_no = 1;
    while (std::getline(source, line)) {
        ++line_no;
        auto row = detail::trim(line);
        if (row.empty()) continue;
        auto comma = row.find(',');
        std::string context = "line " + std::to_string(line_no);
        if (comma == std::string_view::npos)
            throw_error(ErrorCode::format_error, "expected two fields at " + context);
        if (row.find(',', comma + 1) != std::string_view::npos)
            throw_error(ErrorCode::format_error, "expected exactly two fields at " + context);
        double t = detail::parse_double(row.substr(0, comma), ErrorCode::format_error, context);
        double a = detail::parse_double(row.substr(comma + 1), ErrorCode::format_error, context);
        require(std::isfinite(t), ErrorCode::value_error, "non-finite timestamp at " + context);
        require(std::isfinite(a), ErrorCode::value_error, "non-finite attenuation at " + context);
        require(a >= 0.0, ErrorCode::value_error, "negative attenuation at " + context);
        timestamps.push_back(t);
        values.push_back(a);
    }
    if (values.empty()) throw_error(ErrorCode::empty_input, "no data rows");

    AttenuationSeries series;
    series.gateway_id = gateway_id;
    series.start_time_s = timestamps.front();
    series.values = std::move(values);

    if (series.values.size() == 1) {
        series.sample_rate_hz = 10.0;
        return series;
    }

    std::vector<double> spacings(timestamps.size() - 1);
    for (std::size_t i = 0; i + 1 < timestamps.size(); ++i)
        spacings[i] = timestamps[i + 1] - timestamps[i];
    std::vector<double> sorted = spacings;
    std::sort(sorted.begin(), sorted.end());
    double median = sorted[sorted.size() / 2];
    if (sorted.size() % 2 == 0)
        median = 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
    require(median > 0.0, ErrorCode::spacing_error, "non-increasing timestamps");
    for (std::size_t i = 0; i < spacings.size(); ++i) {
        if (std::abs(spacings[i] - median) > 0.01 * median)
            throw_error(ErrorCode::spacing_error,
                        "row spacing " + detail::format_double(spacings[i]) +
                            " deviates from median " + detail::format_double(median) +
                            " by more than 1% (row " + std::to_string(i + 2) + ")");
    }
    series.sample_rate_hz = 1.0 / median;
    return series;
}

inline AttenuationSeries ingest_csv_file(const std::string& path, const std::string& gateway_id = "") {
    std::ifstream in(path);
    if (!in) throw_error(ErrorCode::usage_error, "cannot open '" + path + "'");
    return ingest_csv(in, gateway_id.empty() ? path : gateway_id);
}

inline void write_csv(const AttenuationSeries& series, std::ostream& out) {
    out << kSeriesCsvHeader << '\n';
    for (std::size_t i = 0; i < series.values.size(); ++i) {
        out << detail::format_double(series.time_at(i)) << ','
            << detail::format_double(series.values[i]) << '\n';
    }
}

inline std::string to_csv(const AttenuationSeries& series) {
    std::ostringstream out;
    write_csv(series, out);
    return out.str();
}

} // namespace airis2
