#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fanns {

using NodeId = std::uint32_t;
using LabelId = std::uint32_t;

inline constexpr const char* kVersion = "0.1.0";

// Error hierarchy. Contract violations throw; the CLI maps exception
// types to exit codes.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionMismatchError : Error {
    using Error::Error;
};

struct AttributeKindError : Error {
    using Error::Error;
};

struct SchemaMismatchError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct FormatError : Error {
    using Error::Error;
};

struct HashMismatchError : Error {
    using Error::Error;
};

struct WorkloadError : Error {
    using Error::Error;
};

// FNV-1a 64-bit, used for content hashes in manifests.
class Fnv64 {
public:
    void update(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ull;
        }
    }
    std::uint64_t digest() const { return state_; }
    std::string hex() const;

private:
    std::uint64_t state_ = 0xcbf29ce484222325ull;
};

std::string fnv64_hex(const void* data, std::size_t len);
std::string hash_file(const std::string& path);   // throws IoError if unreadable
std::string hash_string(const std::string& s);

}  // namespace fanns
