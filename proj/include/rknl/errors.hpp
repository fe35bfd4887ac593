#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace rknl {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed concrete syntax; `offset` is the byte position in the input.
struct ParseError : Error {
    std::size_t offset;
    ParseError(const std::string& msg, std::size_t off)
        : Error(msg + " (at byte " + std::to_string(off) + ")"), offset(off) {}
};

// Integer metrics (size, potential) refuse to wrap on deeply shared terms.
struct OverflowError : Error {
    using Error::Error;
};

inline std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r;
    if (__builtin_add_overflow(a, b, &r)) {
        throw OverflowError("integer overflow");
    }
    return r;
}

}  // namespace rknl
