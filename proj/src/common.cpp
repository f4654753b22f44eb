#include "fanns/common.hpp"

#include <cstdio>
#include <fstream>
#include <vector>

namespace fanns {

std::string Fnv64::hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(state_));
    return std::string(buf);
}

std::string fnv64_hex(const void* data, std::size_t len) {
    Fnv64 h;
    h.update(data, len);
    return h.hex();
}

std::string hash_string(const std::string& s) { return fnv64_hex(s.data(), s.size()); }

std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    Fnv64 h;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        const auto got = in.gcount();
        if (got > 0) h.update(buf.data(), static_cast<std::size_t>(got));
    }
    return h.hex();
}

}  // namespace fanns
