#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "airis2/error.hpp"
#include "airis2/version.hpp"

namespace airis2 {

// FNV-1a 64-bit digest, hex-encoded. Good enough to pin down which input
// bytes a run consumed.
inline std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t hash = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return std::string(buf);
}

inline std::string digest_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::usage_error, "cannot open '" + path.string() + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a_hex(bytes);
}

// Emitted next to every CLI output artifact: the fully resolved configuration
// plus input digests, so a run can be repeated exactly.
struct RunManifest {
    std::string subcommand;
    nlohmann::json config = nlohmann::json::object();
    std::map<std::string, std::string> input_digests;
    std::map<std::string, std::string> output_digests;
    double wall_time_s = 0.0;

    nlohmann::json to_json() const {
        nlohmann::json doc;
        doc["format"] = "airis2-manifest";
        doc["version"] = 1;
        doc["tool_version"] = kVersion;
        doc["subcommand"] = subcommand;
        doc["config"] = config;
        doc["input_digests"] = input_digests;
        doc["output_digests"] = output_digests;
        doc["wall_time_s"] = wall_time_s;
        return doc;
    }
};

// Named run_manifest.json so it cannot collide with a dataset's own manifest.
inline void write_manifest(const RunManifest& manifest, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "run_manifest.json");
    require(static_cast<bool>(out), ErrorCode::usage_error, "cannot write run manifest");
    out << manifest.to_json().dump(2) << '\n';
}

} // namespace airis2
