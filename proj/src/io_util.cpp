#include "sevkit/io_util.hpp"

#include <fstream>
#include <sstream>

#include "sevkit/errors.hpp"

namespace sevkit {

std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::string digest_hex(std::uint64_t d) {
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = hex[d & 0xf];
        d >>= 4;
    }
    return out;
}

std::string file_digest(const std::filesystem::path& p) { return digest_hex(fnv1a64(read_file(p))); }

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(errc::io_failure, "cannot open file: " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void atomic_write(const std::filesystem::path& p, const std::string& content) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::filesystem::path tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(errc::io_failure, "cannot write file: " + tmp.string());
        out << content;
        if (!out) fail(errc::io_failure, "short write: " + tmp.string());
    }
    std::filesystem::rename(tmp, p);
}

nlohmann::json load_json(const std::filesystem::path& p) {
    auto text = read_file(p);
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) fail(errc::corrupt_payload, "invalid JSON in " + p.string());
    return j;
}

void save_json(const std::filesystem::path& p, const nlohmann::json& j) {
    atomic_write(p, j.dump(2) + "\n");
}

std::string double_to_string(double v) {
    nlohmann::json j = v;
    return j.dump();
}

} // namespace sevkit
