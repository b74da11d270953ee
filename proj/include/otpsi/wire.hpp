#pragma once

#include <cstring>
#include <span>
#include <vector>

#include "otpsi/aggregator.hpp"
#include "otpsi/channel.hpp"
#include "otpsi/common.hpp"
#include "otpsi/oprf.hpp"
#include "otpsi/params.hpp"

namespace otpsi {

// Session framing. Every message is
//   magic "OTPS" | version u16 LE | msg-type u8 | length u32 LE | payload
// Unknown types, bad magic or a version mismatch reject the session.

enum class MsgType : uint8_t {
    Params = 1,
    Shares = 2,
    OprfReq = 3,
    OprfResp = 4,
    Hits = 5,
    Bye = 6,
};

inline constexpr uint8_t kFrameMagic[4] = {'O', 'T', 'P', 'S'};
inline constexpr uint16_t kWireVersion = 1;
inline constexpr size_t kFrameHeaderBytes = 11;

struct Frame {
    MsgType type;
    Bytes payload;
};

inline Bytes encode_frame(MsgType type, std::span<const uint8_t> payload) {
    Bytes out(kFrameHeaderBytes + payload.size());
    std::memcpy(out.data(), kFrameMagic, 4);
    put_u16_le(out.data() + 4, kWireVersion);
    out[6] = uint8_t(type);
    put_u32_le(out.data() + 7, uint32_t(payload.size()));
    std::memcpy(out.data() + kFrameHeaderBytes, payload.data(), payload.size());
    return out;
}

inline void send_frame(Channel& ch, MsgType type, std::span<const uint8_t> payload) {
    Bytes f = encode_frame(type, payload);
    ch.send(f);
}

inline Frame recv_frame(Channel& ch, size_t max_payload = size_t(1) << 31) {
    uint8_t hdr[kFrameHeaderBytes];
    ch.recv_exact(hdr);
    if (std::memcmp(hdr, kFrameMagic, 4) != 0) throw ProtocolError("bad frame magic");
    if (get_u16_le(hdr + 4) != kWireVersion) throw ProtocolError("protocol version mismatch");
    uint8_t t = hdr[6];
    if (t < uint8_t(MsgType::Params) || t > uint8_t(MsgType::Bye))
        throw ProtocolError("unknown message type");
    uint32_t len = get_u32_le(hdr + 7);
    if (len > max_payload) throw ProtocolError("oversized frame");
    Frame f;
    f.type = MsgType(t);
    f.payload.resize(len);
    if (len) ch.recv_exact(f.payload);
    return f;
}

inline Frame expect_frame(Channel& ch, MsgType want) {
    Frame f = recv_frame(ch);
    if (f.type != want) throw ProtocolError("unexpected message type");
    return f;
}

// ---- payload codecs ---------------------------------------------------------

/// Participant hello: id, set size (plaintext by design), deployment.
struct ParamsHello {
    uint32_t participant_id = 0;
    uint64_t set_size = 0;
    uint8_t deployment = 0;

    Bytes encode() const {
        Bytes b(13);
        put_u32_le(b.data(), participant_id);
        put_u64_le(b.data() + 4, set_size);
        b[12] = deployment;
        return b;
    }
    static ParamsHello decode(std::span<const uint8_t> b) {
        if (b.size() != 13) throw ProtocolError("bad params hello");
        return {get_u32_le(b.data()), get_u64_le(b.data() + 4), b[12]};
    }
};

/// Aggregator broadcast: the agreed session geometry, round id included.
struct ParamsBroadcast {
    uint32_t n_participants = 0;
    uint16_t threshold = 0;
    uint64_t max_set_size = 0;
    uint16_t n_key_holders = 0;
    uint64_t round_id = 0;
    uint16_t table_count = 0;
    uint32_t bin_count = 0;

    Bytes encode() const {
        Bytes b(30);
        put_u32_le(b.data(), n_participants);
        put_u16_le(b.data() + 4, threshold);
        put_u64_le(b.data() + 6, max_set_size);
        put_u16_le(b.data() + 14, n_key_holders);
        put_u64_le(b.data() + 16, round_id);
        put_u16_le(b.data() + 24, table_count);
        put_u32_le(b.data() + 26, bin_count);
        return b;
    }
    static ParamsBroadcast decode(std::span<const uint8_t> b) {
        if (b.size() != 30) throw ProtocolError("bad params broadcast");
        ParamsBroadcast p;
        p.n_participants = get_u32_le(b.data());
        p.threshold = get_u16_le(b.data() + 4);
        p.max_set_size = get_u64_le(b.data() + 6);
        p.n_key_holders = get_u16_le(b.data() + 14);
        p.round_id = get_u64_le(b.data() + 16);
        p.table_count = get_u16_le(b.data() + 24);
        p.bin_count = get_u32_le(b.data() + 26);
        return p;
    }
};

/// OPRF batches: 4-byte count then fixed-length group encodings.
inline Bytes encode_point_batch(std::span<const oprf::GroupElement> points) {
    Bytes b(4 + points.size() * oprf::kPointBytes);
    put_u32_le(b.data(), uint32_t(points.size()));
    for (size_t i = 0; i < points.size(); i++)
        std::memcpy(b.data() + 4 + i * oprf::kPointBytes, points[i].b.data(), oprf::kPointBytes);
    return b;
}

inline std::vector<oprf::GroupElement> decode_point_batch(std::span<const uint8_t> b) {
    if (b.size() < 4) throw ProtocolError("bad point batch");
    uint32_t count = get_u32_le(b.data());
    if (b.size() != 4 + size_t(count) * oprf::kPointBytes)
        throw ProtocolError("point batch length mismatch");
    std::vector<oprf::GroupElement> out(count);
    for (size_t i = 0; i < count; i++)
        std::memcpy(out[i].b.data(), b.data() + 4 + i * oprf::kPointBytes, oprf::kPointBytes);
    return out;
}

/// Per-participant hit notification: count-prefixed (table u16, bin u32).
inline Bytes encode_cells(std::span<const Cell> cells) {
    Bytes b(4 + cells.size() * 6);
    put_u32_le(b.data(), uint32_t(cells.size()));
    for (size_t i = 0; i < cells.size(); i++) {
        put_u16_le(b.data() + 4 + i * 6, cells[i].table);
        put_u32_le(b.data() + 6 + i * 6, cells[i].bin);
    }
    return b;
}

inline std::vector<Cell> decode_cells(std::span<const uint8_t> b) {
    if (b.size() < 4) throw ProtocolError("bad cell list");
    uint32_t count = get_u32_le(b.data());
    if (b.size() != 4 + size_t(count) * 6) throw ProtocolError("cell list length mismatch");
    std::vector<Cell> out(count);
    for (size_t i = 0; i < count; i++) {
        out[i].table = get_u16_le(b.data() + 4 + i * 6);
        out[i].bin = get_u32_le(b.data() + 6 + i * 6);
    }
    return out;
}

}  // namespace otpsi
