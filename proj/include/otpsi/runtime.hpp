#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "otpsi/aggregator.hpp"
#include "otpsi/channel.hpp"
#include "otpsi/oprss.hpp"
#include "otpsi/params.hpp"
#include "otpsi/share_gen.hpp"
#include "otpsi/wire.hpp"

namespace otpsi {

// Protocol phases in order. "params" is session setup and "bye" is
// teardown; the phases between them are the communication rounds the
// transcript counts. Non-interactive sessions use shares+hits (one
// upload, one reply); collusion-safe sessions use all five data rounds:
// the coefficient blind batch, its evaluation, the batched bin/ordering
// OPRF exchange, then shares and hits.
inline const std::vector<std::string>& phase_order() {
    static const std::vector<std::string> order = {"params",    "oprss-blind", "oprss-eval",
                                                   "oprf-hash", "shares",      "hits",
                                                   "bye"};
    return order;
}

struct Transcript {
    struct Msg {
        std::string phase;
        std::string from, to;
        MsgType type;
        size_t payload_bytes;
    };

    void log(const std::string& phase, const std::string& from, const std::string& to,
             MsgType type, size_t payload_bytes) {
        std::lock_guard<std::mutex> lk(*mu_);
        msgs.push_back({phase, from, to, type, payload_bytes});
    }

    /// Communication rounds present, in protocol order (setup/teardown
    /// phases excluded).
    std::vector<std::string> rounds() const {
        std::vector<std::string> out;
        for (const auto& p : phase_order()) {
            if (p == "params" || p == "bye") continue;
            for (const auto& m : msgs)
                if (m.phase == p) {
                    out.push_back(p);
                    break;
                }
        }
        return out;
    }
    size_t round_count() const { return rounds().size(); }

    size_t count_type(MsgType t) const {
        size_t n = 0;
        for (const auto& m : msgs)
            if (m.type == t) n++;
        return n;
    }

    std::vector<Msg> msgs;

private:
    std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
};

/// Bytes sent per directed (from, to) stream; used to compare transports.
struct StreamLogs {
    Bytes* stream(const std::string& from, const std::string& to) {
        std::lock_guard<std::mutex> lk(*mu_);
        return &streams[{from, to}];
    }
    std::map<std::pair<std::string, std::string>, Bytes> streams;

private:
    std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
};

namespace detail {

/// Channel view a driver uses: frame IO plus transcript/stream logging.
class Peer {
public:
    Peer(Channel& ch, std::string self, std::string peer, Transcript* tr, StreamLogs* logs)
        : raw_(ch), self_(std::move(self)), peer_(std::move(peer)), tr_(tr),
          rec_(ch, logs ? logs->stream(self_, peer_) : nullptr) {}

    void send(const std::string& phase, MsgType type, std::span<const uint8_t> payload) {
        send_frame(rec_, type, payload);
        if (tr_) tr_->log(phase, self_, peer_, type, payload.size());
    }
    Frame expect(MsgType want) { return expect_frame(rec_, want); }
    const std::string& name() const { return peer_; }

private:
    Channel& raw_;
    std::string self_, peer_;
    Transcript* tr_;
    RecordingChannel rec_;
};

inline std::string participant_name(uint32_t id) { return "P" + std::to_string(id); }
inline std::string keyholder_name(uint32_t id) { return "KH" + std::to_string(id); }

}  // namespace detail

// ---- participant -------------------------------------------------------

struct ParticipantRuntime {
    uint32_t id = 0;
    std::vector<Element> set;  // deduplicated by the driver
    Deployment deployment = Deployment::NonInteractive;
    ParticipantKey key;  // non-interactive only
    Rng rng = Rng::system();
    unsigned threads = 1;
};

struct ParticipantResult {
    SessionParams params;
    std::vector<Element> intersection;
    std::vector<Cell> notified_cells;
    size_t shares_payload_bytes = 0;
};

inline ParticipantResult drive_participant(ParticipantRuntime& rt, Channel& aggregator,
                                           std::span<Channel* const> key_holders,
                                           Transcript* tr = nullptr, StreamLogs* logs = nullptr) {
    std::sort(rt.set.begin(), rt.set.end());
    rt.set.erase(std::unique(rt.set.begin(), rt.set.end()), rt.set.end());
    if (rt.set.empty()) throw ConfigError("participant set is empty");

    const std::string self = detail::participant_name(rt.id);
    detail::Peer agg(aggregator, self, "A", tr, logs);
    std::vector<detail::Peer> khs;
    khs.reserve(key_holders.size());
    for (size_t j = 0; j < key_holders.size(); j++)
        khs.emplace_back(*key_holders[j], self, detail::keyholder_name(uint32_t(j + 1)), tr, logs);

    ParamsHello hello{rt.id, rt.set.size(), uint8_t(rt.deployment)};
    agg.send("params", MsgType::Params, hello.encode());
    auto bc = ParamsBroadcast::decode(agg.expect(MsgType::Params).payload);

    SessionParams params;
    params.n_participants = bc.n_participants;
    params.threshold = bc.threshold;
    params.max_set_size = bc.max_set_size;
    params.n_key_holders = bc.n_key_holders;
    params.round_id = bc.round_id;
    params.table_count = bc.table_count;
    params.deployment = rt.deployment;
    params.validate();
    if (bc.bin_count != params.bin_count()) throw ProtocolError("bin count mismatch");
    if (rt.id == 0 || rt.id > params.n_participants) throw ProtocolError("participant id out of range");
    if (rt.set.size() > params.max_set_size) throw SetTooLarge();

    ShareTable table;
    SlotIndexMap slots;
    BuildOptions opt;
    opt.threads = rt.threads;
    Rng dummy_rng = rt.rng.fork(0x64756d6d79);  // "dummy"
    if (rt.deployment == Deployment::NonInteractive) {
        KeyedHash kh(rt.key);
        KeyedDerivations derive(kh, rt.set, params, rt.id);
        std::tie(table, slots) = build_share_table(rt.set, params, derive, dummy_rng, opt);
    } else {
        if (khs.size() != params.n_key_holders) throw ConfigError("key holder count mismatch");
        auto batch = oprss::ClientBatch::create(rt.set, params, rt.rng);
        Bytes coef_wire = encode_point_batch(batch.coef_points);
        for (auto& kh : khs) kh.send("oprss-blind", MsgType::OprfReq, coef_wire);
        std::vector<std::vector<oprf::GroupElement>> coef_resps, hash_resps;
        for (auto& kh : khs)
            coef_resps.push_back(decode_point_batch(kh.expect(MsgType::OprfResp).payload));
        Bytes hash_wire = encode_point_batch(batch.hash_points);
        for (auto& kh : khs) kh.send("oprf-hash", MsgType::OprfReq, hash_wire);
        for (auto& kh : khs)
            hash_resps.push_back(decode_point_batch(kh.expect(MsgType::OprfResp).payload));
        auto derived = oprss::finalize(rt.set, params, batch, coef_resps, hash_resps);
        oprss::OprssDerivations derive(derived, params, rt.id);
        std::tie(table, slots) = build_share_table(rt.set, params, derive, dummy_rng, opt);
    }

    Bytes table_wire = table.serialize();
    ParticipantResult result;
    result.params = params;
    result.shares_payload_bytes = table_wire.size();
    agg.send("shares", MsgType::Shares, table_wire);

    result.notified_cells = decode_cells(agg.expect(MsgType::Hits).payload);
    result.intersection = map_indexes_to_elements(result.notified_cells, slots);
    agg.send("bye", MsgType::Bye, {});
    return result;
}

// ---- aggregator ----------------------------------------------------------

struct AggregatorRuntime {
    uint32_t n_participants = 0;
    uint16_t threshold = 0;
    uint16_t table_count = 20;
    uint16_t n_key_holders = 0;
    uint64_t round_id = 0;
    Deployment deployment = Deployment::NonInteractive;
    unsigned threads = 1;
};

struct AggregatorResult {
    SessionParams params;
    HitReport report;
    ReconStats stats;
    std::vector<size_t> shares_payload_bytes;  // per participant id
};

/// Collects hellos, broadcasts the agreed geometry (max set size and
/// round id included), gathers uploads, reconstructs, and notifies. The
/// aggregator sees nothing but uniform field elements and hit structure.
inline AggregatorResult drive_aggregator(const AggregatorRuntime& rt,
                                         std::span<Channel* const> connections,
                                         Transcript* tr = nullptr, StreamLogs* logs = nullptr) {
    if (connections.size() != rt.n_participants) throw ConfigError("connection count mismatch");
    const uint32_t n = rt.n_participants;

    // Hellos arrive in connection order; re-index by participant id.
    std::vector<std::unique_ptr<detail::Peer>> peers(n);
    std::vector<uint64_t> set_sizes(n, 0);
    for (Channel* ch : connections) {
        Frame f = expect_frame(*ch, MsgType::Params);
        auto hello = ParamsHello::decode(f.payload);
        if (hello.participant_id == 0 || hello.participant_id > n)
            throw ProtocolError("participant id out of range");
        if (peers[hello.participant_id - 1]) throw ProtocolError("duplicate participant id");
        if (hello.deployment != uint8_t(rt.deployment))
            throw ProtocolError("deployment mismatch");
        if (hello.set_size == 0)
            throw ProtocolError("empty-set participants must be excluded before the session");
        set_sizes[hello.participant_id - 1] = hello.set_size;
        peers[hello.participant_id - 1] = std::make_unique<detail::Peer>(
            *ch, "A", detail::participant_name(hello.participant_id), tr, logs);
    }

    SessionParams params;
    params.n_participants = n;
    params.threshold = rt.threshold;
    params.max_set_size = *std::max_element(set_sizes.begin(), set_sizes.end());
    params.n_key_holders = rt.n_key_holders;
    params.round_id = rt.round_id;
    params.table_count = rt.table_count;
    params.deployment = rt.deployment;
    params.validate();

    ParamsBroadcast bc{n, params.threshold, params.max_set_size, params.n_key_holders,
                       params.round_id, params.table_count, params.bin_count()};
    Bytes bc_wire = bc.encode();
    for (auto& p : peers) p->send("params", MsgType::Params, bc_wire);

    AggregatorResult result;
    result.params = params;
    result.shares_payload_bytes.resize(n);
    std::vector<ShareTable> tables(n);
    for (uint32_t i = 0; i < n; i++) {
        Frame f = peers[i]->expect(MsgType::Shares);
        result.shares_payload_bytes[i] = f.payload.size();
        tables[i] = ShareTable::deserialize(f.payload);
        if (tables[i].n_tables != params.table_count || tables[i].n_bins != params.bin_count())
            throw GeometryMismatch();
    }

    result.report = reconstruct_hits(tables, params, rt.threads, &result.stats);
    for (uint32_t i = 0; i < n; i++)
        peers[i]->send("hits", MsgType::Hits, encode_cells(result.report.per_participant[i]));
    for (uint32_t i = 0; i < n; i++) peers[i]->expect(MsgType::Bye);
    return result;
}

// ---- key holder -----------------------------------------------------------

struct KeyholderRuntime {
    oprf::OprfKeyShare share;
    uint32_t n_participants = 0;
};

/// Serves each participant's two batched exchanges. Only blinded group
/// elements ever arrive here; requests are evaluated statelessly.
inline void drive_keyholder(const KeyholderRuntime& rt, std::span<Channel* const> connections,
                            Transcript* tr = nullptr, StreamLogs* logs = nullptr) {
    const std::string self = detail::keyholder_name(rt.share.holder_id);
    for (size_t i = 0; i < connections.size(); i++) {
        // Participant identity is irrelevant to evaluation; name by slot.
        detail::Peer peer(*connections[i], self, "P?", tr, logs);
        auto coef = decode_point_batch(peer.expect(MsgType::OprfReq).payload);
        auto coef_out = oprss::evaluate_coef_batch(coef, rt.share);
        peer.send("oprss-eval", MsgType::OprfResp, encode_point_batch(coef_out));
        auto hash = decode_point_batch(peer.expect(MsgType::OprfReq).payload);
        auto hash_out = oprss::evaluate_hash_batch(hash, rt.share);
        peer.send("oprf-hash", MsgType::OprfResp, encode_point_batch(hash_out));
    }
}

// ---- in-process simulation --------------------------------------------------

struct SimOptions {
    Deployment deployment = Deployment::NonInteractive;
    uint16_t threshold = 0;
    uint16_t table_count = 20;
    uint16_t n_key_holders = 1;
    uint64_t round_id = 1;
    uint64_t seed = 1;
    unsigned threads = 1;
};

struct SimResult {
    SessionParams params;
    std::vector<std::vector<Element>> outputs;  // per participant
    HitReport report;
    ReconStats stats;
    Transcript transcript;
    StreamLogs streams;
    std::vector<size_t> shares_payload_bytes;
};

/// Deterministic key material derived from the simulation seed; the
/// networked tests reuse these to compare transports byte for byte.
inline ParticipantKey sim_participant_key(uint64_t seed) {
    Rng r = Rng::from_u64(seed).fork(0x6b6579);  // "key"
    ParticipantKey k;
    r.fill(k.bytes);
    return k;
}

inline std::vector<oprf::OprfKeyShare> sim_holder_shares(uint64_t seed, uint16_t k,
                                                         uint16_t threshold) {
    Rng r = Rng::from_u64(seed).fork(0x686f6c64);  // "hold"
    std::vector<oprf::OprfKeyShare> out;
    out.reserve(k);
    for (uint16_t j = 1; j <= k; j++) out.push_back(oprf::OprfKeyShare::random(j, threshold, r));
    return out;
}

/// Runs every role in one process over in-memory byte streams. Produces
/// the same frames as the networked path given the same seeds.
inline SimResult simulate_local(const std::vector<std::vector<Element>>& sets,
                                const SimOptions& opt) {
    const uint32_t n = uint32_t(sets.size());
    if (opt.threshold < 2 || opt.threshold > n)
        throw ConfigError("threshold out of range for participant count");
    for (const auto& s : sets)
        if (s.empty()) throw ConfigError("empty-set participants must be excluded before the session");

    const uint16_t k = opt.deployment == Deployment::CollusionSafe ? opt.n_key_holders : 0;
    SimResult result;

    // participant <-> aggregator pipes
    std::vector<std::shared_ptr<MemPipe>> all_pipes;
    auto make_pair = [&]() {
        auto fwd = std::make_shared<MemPipe>();
        auto rev = std::make_shared<MemPipe>();
        all_pipes.push_back(fwd);
        all_pipes.push_back(rev);
        return std::pair{std::make_unique<MemChannel>(fwd, rev),
                         std::make_unique<MemChannel>(rev, fwd)};
    };
    std::vector<std::unique_ptr<MemChannel>> p_side(n), a_side(n);
    for (uint32_t i = 0; i < n; i++) {
        auto [pa, ap] = make_pair();
        p_side[i] = std::move(pa);
        a_side[i] = std::move(ap);
    }
    // participant <-> key holder pipes, [holder][participant]
    std::vector<std::vector<std::unique_ptr<MemChannel>>> pk_side(k), kp_side(k);
    for (uint16_t j = 0; j < k; j++) {
        pk_side[j].resize(n);
        kp_side[j].resize(n);
        for (uint32_t i = 0; i < n; i++) {
            auto [pk, kp] = make_pair();
            pk_side[j][i] = std::move(pk);
            kp_side[j][i] = std::move(kp);
        }
    }

    ParticipantKey key = sim_participant_key(opt.seed);
    auto holder_shares = sim_holder_shares(opt.seed, k, opt.threshold);

    std::vector<std::thread> workers;
    std::vector<ParticipantResult> p_results(n);
    std::exception_ptr err;
    std::mutex err_mu;
    // Any role failure poisons every pipe so blocked peers unwind
    // instead of hanging; the first error wins.
    auto guard = [&](auto fn) {
        return [&, fn] {
            try {
                fn();
            } catch (...) {
                {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!err) err = std::current_exception();
                }
                for (auto& p : all_pipes) p->close();
            }
        };
    };

    for (uint32_t i = 0; i < n; i++) {
        workers.emplace_back(guard([&, i] {
            ParticipantRuntime rt;
            rt.id = i + 1;
            rt.set = sets[i];
            rt.deployment = opt.deployment;
            rt.key = key;
            rt.rng = Rng::from_u64(opt.seed).fork(0x70 /* participant space */ + rt.id);
            std::vector<Channel*> khs;
            for (uint16_t j = 0; j < k; j++) khs.push_back(pk_side[j][i].get());
            p_results[i] =
                drive_participant(rt, *p_side[i], khs, &result.transcript, &result.streams);
        }));
    }
    for (uint16_t j = 0; j < k; j++) {
        workers.emplace_back(guard([&, j] {
            KeyholderRuntime rt{holder_shares[j], n};
            std::vector<Channel*> conns;
            for (uint32_t i = 0; i < n; i++) conns.push_back(kp_side[j][i].get());
            drive_keyholder(rt, conns, &result.transcript, &result.streams);
        }));
    }

    AggregatorResult agg_result;
    workers.emplace_back(guard([&] {
        AggregatorRuntime agg_rt;
        agg_rt.n_participants = n;
        agg_rt.threshold = opt.threshold;
        agg_rt.table_count = opt.table_count;
        agg_rt.n_key_holders = k;
        agg_rt.round_id = opt.round_id;
        agg_rt.deployment = opt.deployment;
        agg_rt.threads = opt.threads;
        std::vector<Channel*> conns;
        for (uint32_t i = 0; i < n; i++) conns.push_back(a_side[i].get());
        agg_result = drive_aggregator(agg_rt, conns, &result.transcript, &result.streams);
    }));
    for (auto& t : workers) t.join();
    if (err) std::rethrow_exception(err);

    result.params = agg_result.params;
    result.report = std::move(agg_result.report);
    result.stats = agg_result.stats;
    result.shares_payload_bytes = std::move(agg_result.shares_payload_bytes);
    result.outputs.reserve(n);
    for (auto& pr : p_results) result.outputs.push_back(std::move(pr.intersection));
    return result;
}

}  // namespace otpsi
