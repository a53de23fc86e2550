#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ecglab {

inline constexpr const char* kArtifactVersion = "0.1.0";

// Provenance record written once per CLI run: what ran, with which
// effective configuration and seed, over which inputs (content-hashed),
// producing which outputs.
struct RunManifest {
    std::string command;
    nlohmann::json config = nlohmann::json::object();
    std::uint64_t seed = 0;
    std::map<std::string, std::string> input_hashes; // path -> 64-bit FNV hex
    std::vector<std::string> outputs;
    std::string started_at;  // ISO-8601 UTC
    std::string finished_at; // ISO-8601 UTC
    std::string artifact_version = kArtifactVersion;

    void add_input(const std::filesystem::path& path);
    void add_output(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

// FNV-1a 64 over the file's bytes, as 16 lowercase hex digits.
std::string hash_file_hex(const std::filesystem::path& path);

// Current wall-clock UTC time, microsecond ISO-8601.
std::string now_iso8601();

} // namespace ecglab
