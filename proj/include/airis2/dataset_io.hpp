#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "airis2/dataset.hpp"
#include "airis2/detail/format.hpp"
#include "airis2/error.hpp"

namespace airis2 {

inline constexpr const char* kDatasetFormat = "airis2-dataset";
inline constexpr int kDatasetVersion = 1;

// On-disk dataset: manifest.json plus one CSV shard per split. Shard rows are
// `anchor_index,label,f0..f{L-1}`; features are stored normalized, with the
// fitted stats recorded in the manifest.
struct StoredDataset {
    SplitDataset split;
    double alpha_db = 0.0;
    double delta_t_s = 0.0;
    double history_s = 0.0;
    std::size_t stride_samples = 1;
    std::uint64_t seed = 0;
    double sample_rate_hz = 0.0;
    std::size_t window_len = 0;
};

namespace detail {

inline std::string shard_csv(const std::vector<LabeledWindow>& windows, std::size_t window_len) {
    std::ostringstream out;
    out << "anchor_index,label";
    for (std::size_t i = 0; i < window_len; ++i) out << ",f" << i;
    out << '\n';
    for (const auto& w : windows) {
        out << w.anchor_index << ',' << (w.label ? 1 : 0);
        for (double v : w.features) out << ',' << format_double(v);
        out << '\n';
    }
    return out.str();
}

inline std::vector<LabeledWindow> parse_shard_csv(std::istream& in, std::size_t window_len,
                                                  const std::string& name) {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::format_error,
            name + ": missing header");
    std::vector<LabeledWindow> windows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        auto row = trim(line);
        if (row.empty()) continue;
        LabeledWindow w;
        w.features.reserve(window_len);
        std::size_t field = 0;
        std::size_t start = 0;
        const std::string context = name + " line " + std::to_string(line_no);
        while (start <= row.size()) {
            auto comma = row.find(',', start);
            auto token = row.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                           : comma - start);
            if (field == 0) {
                w.anchor_index = static_cast<std::size_t>(
                    parse_double(token, ErrorCode::format_error, context));
            } else if (field == 1) {
                w.label = parse_double(token, ErrorCode::format_error, context) != 0.0;
            } else {
                w.features.push_back(parse_double(token, ErrorCode::format_error, context));
            }
            ++field;
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        require(w.features.size() == window_len, ErrorCode::format_error,
                context + ": expected " + std::to_string(window_len) + " features, got " +
                    std::to_string(w.features.size()));
        windows.push_back(std::move(w));
    }
    return windows;
}

} // namespace detail

inline void write_dataset(const std::filesystem::path& dir, const StoredDataset& dataset) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["format"] = kDatasetFormat;
    manifest["version"] = kDatasetVersion;
    manifest["alpha_db"] = dataset.alpha_db;
    manifest["delta_t_s"] = dataset.delta_t_s;
    manifest["history_s"] = dataset.history_s;
    manifest["stride_samples"] = dataset.stride_samples;
    manifest["seed"] = dataset.seed;
    manifest["sample_rate_hz"] = dataset.sample_rate_hz;
    manifest["window_len"] = dataset.window_len;
    manifest["features_normalized"] = true;
    manifest["split_sizes"] = {{"train", dataset.split.train.size()},
                               {"val", dataset.split.val.size()},
                               {"test", dataset.split.test.size()}};
    manifest["norm"] = {{"mean_db", dataset.split.norm.mean_db},
                        {"std_db", dataset.split.norm.std_db}};

    std::ofstream mf(dir / "manifest.json");
    require(static_cast<bool>(mf), ErrorCode::usage_error, "cannot write dataset manifest");
    mf << manifest.dump(2) << '\n';

    const std::pair<const char*, const std::vector<LabeledWindow>*> shards[] = {
        {"train.csv", &dataset.split.train},
        {"val.csv", &dataset.split.val},
        {"test.csv", &dataset.split.test},
    };
    for (const auto& [name, windows] : shards) {
        std::ofstream out(dir / name);
        require(static_cast<bool>(out), ErrorCode::usage_error,
                std::string("cannot write ") + name);
        out << detail::shard_csv(*windows, dataset.window_len);
    }
}

inline StoredDataset read_dataset(const std::filesystem::path& dir) {
    std::ifstream mf(dir / "manifest.json");
    require(static_cast<bool>(mf), ErrorCode::usage_error,
            "cannot open dataset manifest in '" + dir.string() + "'");
    nlohmann::json manifest;
    try {
        mf >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw_error(ErrorCode::format_error, std::string("dataset manifest unreadable: ") + e.what());
    }

    StoredDataset dataset;
    try {
        require(manifest.at("format").get<std::string>() == kDatasetFormat,
                ErrorCode::format_error, "not a dataset directory");
        require(manifest.at("version").get<int>() == kDatasetVersion, ErrorCode::format_error,
                "unsupported dataset version");
        dataset.alpha_db = manifest.at("alpha_db").get<double>();
        dataset.delta_t_s = manifest.at("delta_t_s").get<double>();
        dataset.history_s = manifest.at("history_s").get<double>();
        dataset.stride_samples = manifest.at("stride_samples").get<std::size_t>();
        dataset.seed = manifest.at("seed").get<std::uint64_t>();
        dataset.sample_rate_hz = manifest.at("sample_rate_hz").get<double>();
        dataset.window_len = manifest.at("window_len").get<std::size_t>();
        dataset.split.norm.mean_db = manifest.at("norm").at("mean_db").get<double>();
        dataset.split.norm.std_db = manifest.at("norm").at("std_db").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw_error(ErrorCode::format_error, std::string("dataset manifest malformed: ") + e.what());
    }

    const std::pair<const char*, std::vector<LabeledWindow>*> shards[] = {
        {"train.csv", &dataset.split.train},
        {"val.csv", &dataset.split.val},
        {"test.csv", &dataset.split.test},
    };
    for (const auto& [name, windows] : shards) {
        std::ifstream in(dir / name);
        require(static_cast<bool>(in), ErrorCode::usage_error,
                std::string("cannot open dataset shard ") + name);
        *windows = detail::parse_shard_csv(in, dataset.window_len, name);
    }
    return dataset;
}

} // namespace airis2
