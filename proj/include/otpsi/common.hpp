#pragma once

#include <sodium.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <functional>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace otpsi {

using Bytes = std::vector<uint8_t>;

// ---- error types ------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ZeroInverse : Error {
    ZeroInverse() : Error("inverse of zero") {}
};
struct DuplicatePoint : Error {
    DuplicatePoint() : Error("duplicate interpolation point") {}
};
struct LengthMismatch : Error {
    LengthMismatch() : Error("share count does not match basis") {}
};
struct SetTooLarge : Error {
    SetTooLarge() : Error("input set exceeds session maximum") {}
};
struct GeometryMismatch : Error {
    GeometryMismatch() : Error("share table shapes differ") {}
};
struct InvalidEncoding : Error {
    InvalidEncoding() : Error("invalid group element encoding") {}
};
struct ConfigError : Error {
    using Error::Error;
};
struct ProtocolError : Error {
    using Error::Error;
};
struct TimeoutError : Error {
    TimeoutError() : Error("peer timed out") {}
};

inline void ensure_sodium() {
    static const int rc = sodium_init();
    if (rc < 0) throw Error("libsodium initialization failed");
}

// ---- byte packing -----------------------------------------------------

inline void put_u16_be(uint8_t* p, uint16_t v) {
    p[0] = uint8_t(v >> 8);
    p[1] = uint8_t(v);
}
inline void put_u64_be(uint8_t* p, uint64_t v) {
    for (int i = 0; i < 8; i++) p[i] = uint8_t(v >> (56 - 8 * i));
}
inline uint64_t get_u64_be(const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 0; i < 8; i++) v = (v << 8) | p[i];
    return v;
}

inline void put_u16_le(uint8_t* p, uint16_t v) {
    p[0] = uint8_t(v);
    p[1] = uint8_t(v >> 8);
}
inline void put_u32_le(uint8_t* p, uint32_t v) {
    for (int i = 0; i < 4; i++) p[i] = uint8_t(v >> (8 * i));
}
inline void put_u64_le(uint8_t* p, uint64_t v) {
    for (int i = 0; i < 8; i++) p[i] = uint8_t(v >> (8 * i));
}
inline uint16_t get_u16_le(const uint8_t* p) {
    return uint16_t(p[0] | (uint16_t(p[1]) << 8));
}
inline uint32_t get_u32_le(const uint8_t* p) {
    uint32_t v = 0;
    for (int i = 3; i >= 0; i--) v = (v << 8) | p[i];
    return v;
}
inline uint64_t get_u64_le(const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 7; i >= 0; i--) v = (v << 8) | p[i];
    return v;
}

inline std::string to_hex(std::span<const uint8_t> data) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (uint8_t b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

inline Bytes from_hex(std::string_view hex) {
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    if (hex.size() % 2 != 0) throw Error("odd-length hex string");
    Bytes out(hex.size() / 2);
    for (size_t i = 0; i < out.size(); i++) {
        int hi = nibble(hex[2 * i]), lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw Error("bad hex digit");
        out[i] = uint8_t(hi << 4 | lo);
    }
    return out;
}

// ---- deterministic RNG ------------------------------------------------

/// ChaCha20-backed random stream. Seeded instances are fully
/// deterministic, which the tests and the simulator rely on; production
/// entry points seed from the OS.
class Rng {
public:
    explicit Rng(const std::array<uint8_t, 32>& seed) : key_(seed) { ensure_sodium(); }

    static Rng system() {
        std::array<uint8_t, 32> seed;
        ensure_sodium();
        randombytes_buf(seed.data(), seed.size());
        return Rng(seed);
    }

    static Rng from_u64(uint64_t seed) {
        std::array<uint8_t, 32> s{};
        put_u64_le(s.data(), seed);
        return Rng(s);
    }

    /// Independent child stream; parent state is untouched.
    Rng fork(uint64_t label) const {
        std::array<uint8_t, 32> child;
        uint8_t msg[8];
        put_u64_le(msg, label);
        crypto_generichash(child.data(), child.size(), msg, sizeof(msg), key_.data(), key_.size());
        return Rng(child);
    }

    void fill(std::span<uint8_t> out) {
        size_t done = 0;
        while (done < out.size()) {
            if (pos_ == buf_.size()) refill();
            size_t n = std::min(out.size() - done, buf_.size() - pos_);
            std::memcpy(out.data() + done, buf_.data() + pos_, n);
            pos_ += n;
            done += n;
        }
    }

    uint64_t next_u64() {
        uint8_t b[8];
        fill(b);
        return get_u64_le(b);
    }

    /// Uniform in [0, n) by rejection.
    uint64_t below(uint64_t n) {
        uint64_t bound = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = next_u64();
        } while (v >= bound);
        return v % n;
    }

private:
    void refill() {
        uint8_t nonce[crypto_stream_chacha20_NONCEBYTES];
        put_u64_le(nonce, block_++);
        std::memset(buf_.data(), 0, buf_.size());
        crypto_stream_chacha20(buf_.data(), buf_.size(), nonce, key_.data());
        pos_ = 0;
    }

    std::array<uint8_t, 32> key_;
    std::array<uint8_t, 4096> buf_{};
    size_t pos_ = buf_.size();
    uint64_t block_ = 0;
};

// ---- worker pool helper ------------------------------------------------

inline unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Runs fn(worker_index, begin, end) over [0, n) split into contiguous
/// chunks. Deterministic partition: chunk i covers the same range no
/// matter how threads are scheduled.
inline void parallel_for(size_t n, unsigned threads, const std::function<void(unsigned, size_t, size_t)>& fn) {
    threads = resolve_threads(threads);
    if (n == 0) return;
    if (threads <= 1 || n == 1) {
        fn(0, 0, n);
        return;
    }
    unsigned workers = unsigned(std::min<size_t>(threads, n));
    size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr err;
    std::mutex err_mu;
    for (unsigned w = 0; w < workers; w++) {
        size_t begin = w * chunk;
        size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, w, begin, end] {
            try {
                fn(w, begin, end);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace otpsi
