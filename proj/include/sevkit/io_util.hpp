#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

namespace sevkit {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

// FNV-1a, used for input/config digests in manifests and compatibility checks
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(const std::string& s);
std::string digest_hex(std::uint64_t d);
std::string file_digest(const std::filesystem::path& p);

std::string read_file(const std::filesystem::path& p);
// write-temp-rename so partially written outputs are never observed
void atomic_write(const std::filesystem::path& p, const std::string& content);

nlohmann::json load_json(const std::filesystem::path& p);
void save_json(const std::filesystem::path& p, const nlohmann::json& j);

// shortest round-trip decimal form (nlohmann's dtoa), locale-independent
std::string double_to_string(double v);

} // namespace sevkit
