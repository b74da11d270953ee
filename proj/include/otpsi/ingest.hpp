#pragma once

#include <cstdlib>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "otpsi/element.hpp"

namespace otpsi {

/// One CIDR block, IPv4 or IPv6.
struct CidrPrefix {
    Element network;
    uint8_t prefix_len = 0;

    static CidrPrefix parse(std::string_view text) {
        size_t slash = text.find('/');
        std::string addr(text.substr(0, slash));
        auto net = Element::parse_ip(addr);
        if (!net) throw ConfigError("bad CIDR address: " + std::string(text));
        CidrPrefix p;
        p.network = *net;
        p.prefix_len = uint8_t(net->size() * 8);
        if (slash != std::string_view::npos) {
            int len = std::atoi(std::string(text.substr(slash + 1)).c_str());
            if (len < 0 || size_t(len) > net->size() * 8)
                throw ConfigError("bad CIDR prefix length: " + std::string(text));
            p.prefix_len = uint8_t(len);
        }
        return p;
    }

    bool contains(const Element& addr) const {
        if (addr.size() != network.size()) return false;
        uint8_t full = prefix_len / 8, rem = prefix_len % 8;
        if (std::memcmp(addr.bytes().data(), network.bytes().data(), full) != 0) return false;
        if (rem == 0) return true;
        uint8_t mask = uint8_t(0xff << (8 - rem));
        return (addr.bytes()[full] & mask) == (network.bytes()[full] & mask);
    }
};

class CidrSet {
public:
    void add(const CidrPrefix& p) { prefixes_.push_back(p); }
    void add(std::string_view text) { prefixes_.push_back(CidrPrefix::parse(text)); }

    static CidrSet parse_lines(std::istream& in) {
        CidrSet set;
        std::string line;
        while (std::getline(in, line)) {
            std::istringstream ls(line);
            std::string tok;
            if (!(ls >> tok) || tok[0] == '#') continue;
            set.add(tok);
        }
        return set;
    }

    bool contains(const Element& addr) const {
        for (const auto& p : prefixes_)
            if (p.contains(addr)) return true;
        return false;
    }
    size_t size() const { return prefixes_.size(); }

private:
    std::vector<CidrPrefix> prefixes_;
};

/// Column mapping for delimited connection logs. institution < 0 means a
/// single unnamed institution. Fields split on any whitespace unless a
/// delimiter is given.
struct LogColumns {
    int institution = -1;
    int timestamp = 0;
    int source = 1;
    int destination = 2;
    char delimiter = '\0';
};

struct IngestStats {
    uint64_t records = 0;
    uint64_t parse_errors = 0;
    uint64_t outside_window = 0;
    uint64_t wrong_direction = 0;
    uint64_t kept = 0;
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line, char delim) {
    std::vector<std::string> out;
    if (delim == '\0') {
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) out.push_back(tok);
    } else {
        std::string cur;
        for (char c : line) {
            if (c == delim) {
                out.push_back(cur);
                cur.clear();
            } else if (c != '\r') {
                cur.push_back(c);
            }
        }
        out.push_back(cur);
    }
    return out;
}

}  // namespace detail

/// Builds per-institution element sets for one hour bucket: unique
/// external source addresses with an internal destination. Institutions
/// that end up empty are omitted; per-record parse failures are counted,
/// never fatal.
inline std::map<std::string, std::vector<Element>> ingest_hourly_sets(
    std::istream& log, const CidrSet& internal, uint64_t hour, const LogColumns& cols = {},
    IngestStats* stats = nullptr) {
    IngestStats local;
    IngestStats& st = stats ? *stats : local;
    int max_col = std::max({cols.institution, cols.timestamp, cols.source, cols.destination});
    std::map<std::string, std::set<Element>> sets;
    std::string line;
    while (std::getline(log, line)) {
        if (line.empty() || line[0] == '#') continue;
        st.records++;
        auto fields = detail::split_fields(line, cols.delimiter);
        if (int(fields.size()) <= max_col) {
            st.parse_errors++;
            continue;
        }
        char* end = nullptr;
        double ts = std::strtod(fields[cols.timestamp].c_str(), &end);
        if (end == fields[cols.timestamp].c_str()) {
            st.parse_errors++;
            continue;
        }
        auto src = Element::parse_ip(fields[cols.source]);
        auto dst = Element::parse_ip(fields[cols.destination]);
        if (!src || !dst) {
            st.parse_errors++;
            continue;
        }
        if (uint64_t(ts) / 3600 != hour) {
            st.outside_window++;
            continue;
        }
        if (internal.contains(*src) || !internal.contains(*dst)) {
            st.wrong_direction++;
            continue;
        }
        std::string inst = cols.institution >= 0 ? fields[cols.institution] : "local";
        sets[inst].insert(std::move(*src));
        st.kept++;
    }
    std::map<std::string, std::vector<Element>> out;
    for (auto& [inst, elems] : sets)
        out.emplace(inst, std::vector<Element>(elems.begin(), elems.end()));
    return out;
}

}  // namespace otpsi
