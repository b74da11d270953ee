#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "otpsi/common.hpp"
#include "otpsi/element.hpp"
#include "otpsi/keyed_hash.hpp"
#include "otpsi/oprf.hpp"

namespace otpsi {

/// Writes via a temp file and rename so an aborted run never leaves a
/// partial output behind.
inline void write_file_atomic(const std::string& path, std::span<const uint8_t> data) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + tmp);
        out.write(reinterpret_cast<const char*>(data.data()), std::streamsize(data.size()));
        if (!out) throw ConfigError("short write to " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw ConfigError("cannot rename " + tmp);
    }
}

inline void write_file_atomic(const std::string& path, const std::string& text) {
    write_file_atomic(path, std::span<const uint8_t>(
                                reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

// ---- element sets -----------------------------------------------------------

/// Text form: one IP per line, blank lines and '#' comments skipped.
inline std::vector<Element> parse_ip_lines(std::istream& in, uint64_t* bad_lines = nullptr) {
    std::vector<Element> out;
    std::string line;
    while (std::getline(in, line)) {
        size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        size_t e = line.find_last_not_of(" \t\r");
        std::string tok = line.substr(b, e - b + 1);
        if (tok[0] == '#') continue;
        if (auto elem = Element::parse_ip(tok)) {
            out.push_back(std::move(*elem));
        } else if (bad_lines) {
            (*bad_lines)++;
        }
    }
    return out;
}

/// Binary element list: magic "OTPE", count u32 LE, then per element a
/// u8 length and the raw bytes.
inline Bytes encode_element_list(std::span<const Element> elems) {
    size_t total = 8;
    for (const auto& e : elems) total += 1 + e.size();
    Bytes out(total);
    std::memcpy(out.data(), "OTPE", 4);
    put_u32_le(out.data() + 4, uint32_t(elems.size()));
    size_t off = 8;
    for (const auto& e : elems) {
        if (e.size() > 255) throw ConfigError("element longer than 255 bytes");
        out[off++] = uint8_t(e.size());
        std::memcpy(out.data() + off, e.bytes().data(), e.size());
        off += e.size();
    }
    return out;
}

inline std::vector<Element> decode_element_list(std::span<const uint8_t> data) {
    if (data.size() < 8 || std::memcmp(data.data(), "OTPE", 4) != 0)
        throw ConfigError("bad element list header");
    uint32_t count = get_u32_le(data.data() + 4);
    std::vector<Element> out;
    out.reserve(count);
    size_t off = 8;
    for (uint32_t i = 0; i < count; i++) {
        if (off >= data.size()) throw ConfigError("element list truncated");
        uint8_t len = data[off++];
        if (off + len > data.size()) throw ConfigError("element list truncated");
        out.emplace_back(data.data() + off, len);
        off += len;
    }
    if (off != data.size()) throw ConfigError("trailing bytes in element list");
    return out;
}

inline Bytes read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string& s = ss.str();
    return Bytes(s.begin(), s.end());
}

/// Loads a set file, auto-detecting the binary magic.
inline std::vector<Element> load_element_set(const std::string& path) {
    Bytes data = read_file(path);
    if (data.size() >= 4 && std::memcmp(data.data(), "OTPE", 4) == 0)
        return decode_element_list(data);
    std::istringstream in(std::string(data.begin(), data.end()));
    return parse_ip_lines(in);
}

// ---- key material ------------------------------------------------------------

inline void save_participant_key(const std::string& path, const ParticipantKey& key) {
    write_file_atomic(path, to_hex(key.bytes) + "\n");
}

inline ParticipantKey load_participant_key(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open key file " + path);
    std::string hex;
    in >> hex;
    return ParticipantKey::from_hex(hex);
}

/// Key holder scalars, hex lines: holder id, hashing key, then the
/// coefficient keys in order.
inline void save_key_share(const std::string& path, const oprf::OprfKeyShare& share) {
    std::ostringstream out;
    out << share.holder_id << "\n" << to_hex(share.hash_key.b) << "\n";
    for (const auto& s : share.coef_keys) out << to_hex(s.b) << "\n";
    write_file_atomic(path, out.str());
}

inline oprf::OprfKeyShare load_key_share(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open key share file " + path);
    oprf::OprfKeyShare share;
    std::string line;
    if (!(in >> share.holder_id)) throw ConfigError("bad key share file " + path);
    auto read_scalar = [&](oprf::Scalar& s) {
        std::string hex;
        if (!(in >> hex)) return false;
        Bytes b = from_hex(hex);
        if (b.size() != oprf::kScalarBytes) throw ConfigError("bad scalar in " + path);
        std::memcpy(s.b.data(), b.data(), b.size());
        return true;
    };
    if (!read_scalar(share.hash_key)) throw ConfigError("missing hashing key in " + path);
    oprf::Scalar s;
    while (read_scalar(s)) share.coef_keys.push_back(s);
    return share;
}

}  // namespace otpsi
