#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>

namespace ccid {

/// 64-bit FNV-1a. Stable across platforms of the same endianness; used for
/// cache keys and parameter fingerprints, not for security.
class Fnv1a {
public:
    Fnv1a& bytes(const void* data, std::size_t n) noexcept {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ULL;
        }
        return *this;
    }

    template <typename T>
        requires std::is_trivially_copyable_v<T>
    Fnv1a& value(const T& v) noexcept {
        return bytes(&v, sizeof(T));
    }

    template <typename T>
        requires std::is_trivially_copyable_v<T>
    Fnv1a& values(std::span<const T> v) noexcept {
        return bytes(v.data(), v.size_bytes());
    }

    /// Length-prefixed so that ("ab","c") and ("a","bc") differ.
    Fnv1a& text(std::string_view s) noexcept {
        value(static_cast<std::uint64_t>(s.size()));
        return bytes(s.data(), s.size());
    }

    [[nodiscard]] std::uint64_t digest() const noexcept { return state_; }

    [[nodiscard]] std::string hex() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
        return buf;
    }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace ccid
