#pragma once

#include <arpa/inet.h>

#include <compare>
#include <cstring>
#include <optional>
#include <string>
#include <string_view>

#include "otpsi/common.hpp"

namespace otpsi {

/// A set element as a canonical byte string. For the intrusion-detection
/// use case this is a 4-byte IPv4 or 16-byte IPv6 address; tests also use
/// synthetic fixed-width ids. Equality and ordering are byte-wise.
class Element {
public:
    Element() = default;
    explicit Element(Bytes b) : bytes_(std::move(b)) {}
    Element(const uint8_t* p, size_t n) : bytes_(p, p + n) {}

    static Element from_u64(uint64_t v) {
        Bytes b(8);
        put_u64_be(b.data(), v);
        return Element(std::move(b));
    }

    /// Parses dotted-quad IPv4 or RFC 4291 IPv6 text.
    static std::optional<Element> parse_ip(std::string_view text) {
        std::string z(text);
        uint8_t buf[16];
        if (inet_pton(AF_INET, z.c_str(), buf) == 1) return Element(buf, 4);
        if (inet_pton(AF_INET6, z.c_str(), buf) == 1) return Element(buf, 16);
        return std::nullopt;
    }

    const Bytes& bytes() const { return bytes_; }
    size_t size() const { return bytes_.size(); }
    bool empty() const { return bytes_.empty(); }

    /// IP presentation form when the width matches, hex otherwise.
    std::string to_string() const {
        char buf[INET6_ADDRSTRLEN];
        if (bytes_.size() == 4 && inet_ntop(AF_INET, bytes_.data(), buf, sizeof(buf))) return buf;
        if (bytes_.size() == 16 && inet_ntop(AF_INET6, bytes_.data(), buf, sizeof(buf))) return buf;
        return "0x" + to_hex(bytes_);
    }

    friend bool operator==(const Element& a, const Element& b) { return a.bytes_ == b.bytes_; }
    friend std::strong_ordering operator<=>(const Element& a, const Element& b) {
        return a.bytes_ <=> b.bytes_;
    }

private:
    Bytes bytes_;
};

struct ElementHash {
    size_t operator()(const Element& e) const {
        // FNV-1a
        uint64_t h = 0xcbf29ce484222325ULL;
        for (uint8_t b : e.bytes()) {
            h ^= b;
            h *= 0x100000001b3ULL;
        }
        return size_t(h);
    }
};

}  // namespace otpsi
