#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "airis2/dataset.hpp"
#include "airis2/detail/format.hpp"
#include "airis2/error.hpp"
#include "airis2/model.hpp"
#include "airis2/predictors.hpp"
#include "airis2/timeseries.hpp"
#include "airis2/training.hpp"

namespace airis2 {

struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const { return tp + fp + fn + tn; }
};

struct ConfusionPercents {
    double tp = 0.0;
    double fp = 0.0;
    double fn = 0.0;
    double tn = 0.0;

    double sum() const { return tp + fp + fn + tn; }
};

inline ConfusionPercents percent_view(const ConfusionMatrix& cm) {
    require(cm.total() >= 1, ErrorCode::insufficient_data, "empty confusion matrix");
    const double total = static_cast<double>(cm.total());
    return {100.0 * static_cast<double>(cm.tp) / total, 100.0 * static_cast<double>(cm.fp) / total,
            100.0 * static_cast<double>(cm.fn) / total, 100.0 * static_cast<double>(cm.tn) / total};
}

// FN means label = 1, prediction = 0.
inline ConfusionMatrix confusion(const std::vector<bool>& predictions, const std::vector<bool>& labels) {
    require(predictions.size() == labels.size(), ErrorCode::shape_error,
            "prediction/label length mismatch");
    require(!predictions.empty(), ErrorCode::insufficient_data, "empty prediction set");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (labels[i])
            (predictions[i] ? cm.tp : cm.fn)++;
        else
            (predictions[i] ? cm.fp : cm.tn)++;
    }
    return cm;
}

// Both percent conventions are reported: rates over the whole test set
// (fn_rate_total, fp_rate_total) and the per-class conditionals (miss_rate,
// false_alarm_rate). Conditionals with an empty denominator stay unset.
struct RateSet {
    double fn_rate_total = 0.0;
    double fp_rate_total = 0.0;
    std::optional<double> miss_rate;
    std::optional<double> false_alarm_rate;
    double accuracy = 0.0;
};

inline RateSet rates(const ConfusionMatrix& cm) {
    require(cm.total() >= 1, ErrorCode::insufficient_data, "empty confusion matrix");
    const double total = static_cast<double>(cm.total());
    RateSet r;
    r.fn_rate_total = static_cast<double>(cm.fn) / total;
    r.fp_rate_total = static_cast<double>(cm.fp) / total;
    if (cm.fn + cm.tp > 0)
        r.miss_rate = static_cast<double>(cm.fn) / static_cast<double>(cm.fn + cm.tp);
    if (cm.fp + cm.tn > 0)
        r.false_alarm_rate = static_cast<double>(cm.fp) / static_cast<double>(cm.fp + cm.tn);
    r.accuracy = static_cast<double>(cm.tp + cm.tn) / total;
    return r;
}

inline constexpr const char* kAiris2Predictor = "airis2";
inline constexpr const char* kPersistencePredictor = "persistence";

struct SweepConfig {
    std::vector<double> alphas_db;
    std::vector<double> deltas_t_s;
    double history_multiplier = 2.0; // H = multiplier * delta_t
    std::size_t stride_samples = 1;
    std::array<double, 3> fractions = kDefaultFractions;
    int hidden_size = 50;
    double dropout_rate = 0.15;
    double decision_threshold = 0.5;
    TrainConfig train;      // training stream (init, shuffle, dropout)
    std::uint64_t seed = 0; // data stream (split, balancing)
    int workers = 1;
};

struct PredictorCellResult {
    std::string predictor;
    bool skipped = false;
    std::string reason;
    ConfusionMatrix cm;
    RateSet rate_set;
    std::size_t n_test = 0;
    double train_seconds = 0.0;
};

struct SweepCell {
    double alpha_db = 0.0;
    double delta_t_s = 0.0;
    std::vector<PredictorCellResult> entries;
};

struct SweepResult {
    std::vector<SweepCell> cells;
};

namespace detail {

inline SweepCell run_sweep_cell(const AttenuationSeries& series, double alpha_db, double delta_t_s,
                                const SweepConfig& config, std::size_t cell_index) {
    SweepCell cell;
    cell.alpha_db = alpha_db;
    cell.delta_t_s = delta_t_s;

    auto skip_both = [&](const std::string& reason) {
        cell.entries.push_back({kAiris2Predictor, true, reason, {}, {}, 0, 0.0});
        cell.entries.push_back({kPersistencePredictor, true, reason, {}, {}, 0, 0.0});
    };

    WindowSpec spec;
    spec.alpha_db = alpha_db;
    spec.delta_t_s = delta_t_s;
    spec.history_s = config.history_multiplier * delta_t_s;
    spec.stride_samples = config.stride_samples;

    SplitDataset split;
    try {
        split = prepare_dataset(series, spec, mix_seed(config.seed, cell_index), config.fractions);
    } catch (const Error& e) {
        skip_both(e.what());
        return cell;
    }
    if (split.test.empty()) {
        skip_both("empty test split");
        return cell;
    }

    ModelConfig mc;
    mc.hidden_size = config.hidden_size;
    mc.input_dim = 1;
    mc.dropout_rate = config.dropout_rate;
    mc.window_len = static_cast<int>(spec.window_len(series.sample_rate_hz));

    TrainConfig tc = config.train;
    tc.seed = mix_seed(config.train.seed, 1000003 + cell_index);

    const auto started = std::chrono::steady_clock::now();
    auto outcome = train(init_model(mc, mix_seed(tc.seed, 99)), split, tc);
    const double train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    std::vector<bool> labels(split.test.size());
    std::vector<bool> learned(split.test.size());
    std::vector<bool> persisted(split.test.size());
    for (std::size_t i = 0; i < split.test.size(); ++i) {
        const auto& window = split.test[i];
        labels[i] = window.label;
        learned[i] = airis2_predict(outcome.model, window.features, config.decision_threshold,
                                    static_cast<std::ptrdiff_t>(window.anchor_index))
                         .event_predicted;
        persisted[i] = persistence_predict(series.values[window.anchor_index], alpha_db,
                                           static_cast<std::ptrdiff_t>(window.anchor_index))
                           .event_predicted;
    }

    const auto cm_learned = confusion(learned, labels);
    const auto cm_persisted = confusion(persisted, labels);
    cell.entries.push_back({kAiris2Predictor, false, "", cm_learned, rates(cm_learned),
                            split.test.size(), train_seconds});
    cell.entries.push_back({kPersistencePredictor, false, "", cm_persisted, rates(cm_persisted),
                            split.test.size(), 0.0});
    return cell;
}

} // namespace detail

// One fresh model per (alpha, delta_t) cell; the persistence baseline is
// evaluated on the identical test anchors. Cells are independent jobs and may
// run on several workers; results land in fixed grid slots so the outcome is
// identical regardless of scheduling.
inline SweepResult sweep(const AttenuationSeries& series, const SweepConfig& config) {
    validate_series(series);
    validate_config(config.train);
    require(config.history_multiplier > 0.0, ErrorCode::invalid_parameter,
            "history_multiplier must be > 0");
    require(config.stride_samples >= 1, ErrorCode::invalid_parameter, "stride must be >= 1");

    struct Job {
        double alpha_db;
        double delta_t_s;
        std::size_t index;
    };
    std::vector<Job> jobs;
    for (double a : config.alphas_db)
        for (double d : config.deltas_t_s) jobs.push_back({a, d, jobs.size()});

    SweepResult result;
    result.cells.resize(jobs.size());
    if (jobs.empty()) return result;

    const auto worker_count =
        std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(1, config.workers)), jobs.size()));
    if (worker_count == 1) {
        for (const auto& job : jobs)
            result.cells[job.index] =
                detail::run_sweep_cell(series, job.alpha_db, job.delta_t_s, config, job.index);
        return result;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(worker_count);
    for (std::size_t w = 0; w < worker_count; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= jobs.size()) return;
                result.cells[jobs[i].index] = detail::run_sweep_cell(
                    series, jobs[i].alpha_db, jobs[i].delta_t_s, config, jobs[i].index);
            }
        });
    }
    for (auto& t : pool) t.join();
    return result;
}

// Flattened reporting row, one per (predictor, alpha, delta_t).
struct SweepRow {
    std::string predictor;
    double alpha_db = 0.0;
    double delta_t_s = 0.0;
    std::optional<double> fn_rate_total;
    std::optional<double> fp_rate_total;
    std::optional<double> miss_rate;
    std::optional<double> false_alarm_rate;
    std::optional<double> accuracy;
    std::size_t n_test = 0;
    bool skipped = false;
    std::string reason;
};

inline std::vector<SweepRow> flatten(const SweepResult& result) {
    std::vector<SweepRow> rows;
    for (const auto& cell : result.cells) {
        for (const auto& entry : cell.entries) {
            SweepRow row;
            row.predictor = entry.predictor;
            row.alpha_db = cell.alpha_db;
            row.delta_t_s = cell.delta_t_s;
            row.n_test = entry.n_test;
            row.skipped = entry.skipped;
            row.reason = entry.reason;
            if (!entry.skipped) {
                row.fn_rate_total = entry.rate_set.fn_rate_total;
                row.fp_rate_total = entry.rate_set.fp_rate_total;
                row.miss_rate = entry.rate_set.miss_rate;
                row.false_alarm_rate = entry.rate_set.false_alarm_rate;
                row.accuracy = entry.rate_set.accuracy;
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

inline constexpr const char* kSweepCsvHeader =
    "predictor,alpha_db,delta_t_s,fn_rate_total,fp_rate_total,miss_rate,false_alarm_rate,"
    "accuracy,n_test,skipped,reason";

namespace detail {

inline std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string quoted = "\"";
    for (char c : field) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

inline std::string opt_field(const std::optional<double>& value) {
    return value ? format_double(*value) : std::string{};
}

} // namespace detail

inline std::string render_sweep_csv(const SweepResult& result) {
    std::ostringstream out;
    out << kSweepCsvHeader << '\n';
    for (const auto& row : flatten(result)) {
        out << row.predictor << ',' << detail::format_double(row.alpha_db) << ','
            << detail::format_double(row.delta_t_s) << ',' << detail::opt_field(row.fn_rate_total)
            << ',' << detail::opt_field(row.fp_rate_total) << ',' << detail::opt_field(row.miss_rate)
            << ',' << detail::opt_field(row.false_alarm_rate) << ','
            << detail::opt_field(row.accuracy) << ',' << row.n_test << ','
            << (row.skipped ? "true" : "false") << ',' << detail::csv_quote(row.reason) << '\n';
    }
    return out.str();
}

inline std::string render_sweep_json(const SweepResult& result) {
    nlohmann::json doc;
    doc["format"] = "airis2-sweep";
    doc["version"] = 1;
    auto rows = nlohmann::json::array();
    for (const auto& row : flatten(result)) {
        nlohmann::json j;
        j["predictor"] = row.predictor;
        j["alpha_db"] = row.alpha_db;
        j["delta_t_s"] = row.delta_t_s;
        auto opt = [](const std::optional<double>& v) {
            return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
        };
        j["fn_rate_total"] = opt(row.fn_rate_total);
        j["fp_rate_total"] = opt(row.fp_rate_total);
        j["miss_rate"] = opt(row.miss_rate);
        j["false_alarm_rate"] = opt(row.false_alarm_rate);
        j["accuracy"] = opt(row.accuracy);
        j["n_test"] = row.n_test;
        j["skipped"] = row.skipped;
        j["reason"] = row.reason;
        rows.push_back(std::move(j));
    }
    doc["rows"] = std::move(rows);
    return doc.dump(2) + "\n";
}

inline std::string render_report(const SweepResult& result, const std::string& format) {
    require(!result.cells.empty(), ErrorCode::insufficient_data, "empty sweep grid");
    if (format == "csv") return render_sweep_csv(result);
    if (format == "json") return render_sweep_json(result);
    throw_error(ErrorCode::usage_error, "unknown report format '" + format + "' (csv|json)");
}

// Parses the CSV rendering back into rows (used by consumers and tests).
inline std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::format_error, "empty input");
    require(airis2::detail::trim(line) == kSweepCsvHeader, ErrorCode::format_error,
            "unexpected sweep CSV header");

    std::vector<SweepRow> rows;
    while (std::getline(in, line)) {
        if (airis2::detail::trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char c = line[i];
            if (quoted) {
                if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else if (c == '"') {
                    quoted = false;
                } else {
                    field += c;
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                fields.push_back(std::move(field));
                field.clear();
            } else if (c != '\r') {
                field += c;
            }
        }
        fields.push_back(std::move(field));
        require(fields.size() == 11, ErrorCode::format_error, "sweep CSV row must have 11 fields");

        auto opt = [](const std::string& s) -> std::optional<double> {
            if (s.empty()) return std::nullopt;
            return airis2::detail::parse_double(s, ErrorCode::format_error, "sweep CSV");
        };
        SweepRow row;
        row.predictor = fields[0];
        row.alpha_db = airis2::detail::parse_double(fields[1], ErrorCode::format_error, "alpha_db");
        row.delta_t_s = airis2::detail::parse_double(fields[2], ErrorCode::format_error, "delta_t_s");
        row.fn_rate_total = opt(fields[3]);
        row.fp_rate_total = opt(fields[4]);
        row.miss_rate = opt(fields[5]);
        row.false_alarm_rate = opt(fields[6]);
        row.accuracy = opt(fields[7]);
        row.n_test = static_cast<std::size_t>(
            airis2::detail::parse_double(fields[8], ErrorCode::format_error, "n_test"));
        row.skipped = (fields[9] == "true");
        row.reason = fields[10];
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace airis2
