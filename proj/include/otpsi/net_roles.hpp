#pragma once

#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "otpsi/io.hpp"
#include "otpsi/runtime.hpp"

namespace otpsi {

struct Endpoint {
    std::string host = "127.0.0.1";
    uint16_t port = 0;

    static Endpoint parse(const std::string& text) {
        size_t colon = text.rfind(':');
        if (colon == std::string::npos) throw ConfigError("endpoint must be host:port");
        Endpoint e;
        e.host = text.substr(0, colon);
        int p = std::atoi(text.c_str() + colon + 1);
        if (p <= 0 || p > 65535) throw ConfigError("bad port in " + text);
        e.port = uint16_t(p);
        return e;
    }
};

struct NetParticipantConfig {
    ParticipantRuntime runtime;
    Endpoint aggregator;
    std::vector<Endpoint> key_holders;
    std::string output_path;  // empty = stdout only
    unsigned timeout_ms = 60000;
};

inline std::string format_element_lines(std::span<const Element> elems) {
    std::ostringstream out;
    for (const auto& e : elems) out << e.to_string() << "\n";
    return out.str();
}

inline ParticipantResult run_participant(NetParticipantConfig& cfg,
                                         Transcript* tr = nullptr, StreamLogs* logs = nullptr) {
    auto agg = TcpChannel::connect(cfg.aggregator.host, cfg.aggregator.port, cfg.timeout_ms);
    agg->set_recv_timeout_ms(cfg.timeout_ms);
    std::vector<std::unique_ptr<TcpChannel>> khs;
    std::vector<Channel*> kh_ptrs;
    for (const auto& ep : cfg.key_holders) {
        khs.push_back(TcpChannel::connect(ep.host, ep.port, cfg.timeout_ms));
        khs.back()->set_recv_timeout_ms(cfg.timeout_ms);
        kh_ptrs.push_back(khs.back().get());
    }
    ParticipantResult result = drive_participant(cfg.runtime, *agg, kh_ptrs, tr, logs);
    if (!cfg.output_path.empty())
        write_file_atomic(cfg.output_path, format_element_lines(result.intersection));
    return result;
}

struct NetAggregatorConfig {
    AggregatorRuntime runtime;
    Endpoint listen;
    std::string output_path;  // binary hit report (u32 N, then wire records)
    unsigned timeout_ms = 60000;
};

inline Bytes hit_report_file_bytes(const HitReport& report, uint32_t n_participants) {
    Bytes wire = report.serialize();
    Bytes out(4 + wire.size());
    put_u32_le(out.data(), n_participants);
    std::copy(wire.begin(), wire.end(), out.begin() + 4);
    return out;
}

inline AggregatorResult run_aggregator(const NetAggregatorConfig& cfg, TcpListener* listener = nullptr,
                                       Transcript* tr = nullptr, StreamLogs* logs = nullptr) {
    std::unique_ptr<TcpListener> owned;
    if (!listener) {
        owned = std::make_unique<TcpListener>(cfg.listen.host, cfg.listen.port);
        listener = owned.get();
    }
    std::vector<std::unique_ptr<TcpChannel>> conns;
    std::vector<Channel*> ptrs;
    for (uint32_t i = 0; i < cfg.runtime.n_participants; i++) {
        conns.push_back(listener->accept());
        conns.back()->set_recv_timeout_ms(cfg.timeout_ms);
        ptrs.push_back(conns.back().get());
    }
    AggregatorResult result = drive_aggregator(cfg.runtime, ptrs, tr, logs);
    if (!cfg.output_path.empty())
        write_file_atomic(cfg.output_path,
                          hit_report_file_bytes(result.report, cfg.runtime.n_participants));
    return result;
}

struct NetKeyholderConfig {
    KeyholderRuntime runtime;
    Endpoint listen;
    unsigned timeout_ms = 60000;
};

inline void run_keyholder(const NetKeyholderConfig& cfg, TcpListener* listener = nullptr,
                          Transcript* tr = nullptr, StreamLogs* logs = nullptr) {
    std::unique_ptr<TcpListener> owned;
    if (!listener) {
        owned = std::make_unique<TcpListener>(cfg.listen.host, cfg.listen.port);
        listener = owned.get();
    }
    std::vector<std::unique_ptr<TcpChannel>> conns;
    std::vector<Channel*> ptrs;
    for (uint32_t i = 0; i < cfg.runtime.n_participants; i++) {
        conns.push_back(listener->accept());
        conns.back()->set_recv_timeout_ms(cfg.timeout_ms);
        ptrs.push_back(conns.back().get());
    }
    drive_keyholder(cfg.runtime, ptrs, tr, logs);
}

}  // namespace otpsi
