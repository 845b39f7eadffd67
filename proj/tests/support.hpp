#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "bacip/bytes.hpp"

namespace testsupport {

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("bacip-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline bacip::Bytes from_hex(const std::string& hex) {
    auto decoded = bacip::hex_decode(hex);
    if (!decoded) throw std::runtime_error("bad hex in test: " + hex);
    return *decoded;
}

}  // namespace testsupport
