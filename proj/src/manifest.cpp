#include "ecglab/manifest.hpp"

#include "ecglab/errors.hpp"
#include "ecglab/time_util.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

namespace ecglab {

std::string hash_file_hex(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for hashing");
    std::uint64_t h = 14695981039346656037ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (!in) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

std::string now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(
                            now.time_since_epoch())
                            .count();
    return format_iso8601_micros(static_cast<TimeMicros>(micros));
}

void RunManifest::add_input(const std::filesystem::path& path) {
    input_hashes[path.string()] = hash_file_hex(path);
}

void RunManifest::add_output(const std::filesystem::path& path) {
    outputs.push_back(path.string());
}

void RunManifest::save(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["command"] = command;
    j["config"] = config;
    j["seed"] = seed;
    j["input_hashes"] = input_hashes;
    j["outputs"] = outputs;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    j["artifact_version"] = artifact_version;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("short write to " + path.string());
}

} // namespace ecglab
