#pragma once

// Shared helpers for the test binaries: fixture locations and a throwaway
// directory that cleans up after itself.

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

namespace testsup {

inline std::filesystem::path data_dir() {
    return std::filesystem::path(ECGLAB_TEST_DATA_DIR);
}

struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static std::atomic<unsigned> counter{0};
        std::random_device rd;
        path = std::filesystem::temp_directory_path() /
               ("ecglab_test_" + std::to_string(rd()) + "_" +
                std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }

    std::filesystem::path operator/(const std::string& name) const {
        return path / name;
    }
};

} // namespace testsup
