#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tabret {

enum class ErrorKind {
    Io,
    Parse,
    InvalidArgument,
    NotFound,
    State,
};

// Single exception type for the whole core; the kind maps onto the C API
// status codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

// 64-bit FNV-1a. Used for letter-trigram bucketing and for fanning a master
// seed out to per-stage seeds; both need a fixed, documented hash so results
// are stable across platforms and versions.
inline uint64_t fnv1a64(const char* data, size_t len) {
    uint64_t h = 1469598103934665603ull;
    for (size_t i = 0; i < len; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

// Derives a stage-local seed from the master seed and a stage tag, so one
// --seed flag drives every random component without coupling their streams.
inline uint64_t derive_seed(uint64_t master, const std::string& stage) {
    uint64_t h = fnv1a64(stage);
    // splitmix64 finalizer over the combined value
    uint64_t z = master ^ (h + 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace tabret
