// Command-line entry points for the over-threshold intersection toolkit:
// networked roles (participant, aggregator, keyholder), an in-process
// simulator, the reconstruction benchmark, and the hashing-scheme
// analysis harness. Exit codes: 0 ok, 2 configuration, 3 protocol,
// 4 timeout.

#include <CLI11.hpp>

#include <ctime>
#include <fstream>
#include <iostream>

#include "otpsi/otpsi.hpp"

using namespace otpsi;

namespace {

uint64_t current_utc_hour() { return uint64_t(std::time(nullptr)) / 3600; }

std::vector<Element> load_set_from_options(const std::string& set_path,
                                           const std::string& log_path,
                                           const std::string& cidr_path, uint64_t hour,
                                           const LogColumns& cols) {
    if (!set_path.empty()) return load_element_set(set_path);
    if (log_path.empty()) throw ConfigError("either --set or --log is required");
    if (cidr_path.empty()) throw ConfigError("--internal-cidr is required with --log");
    std::ifstream cidr_in(cidr_path);
    if (!cidr_in) throw ConfigError("cannot open " + cidr_path);
    CidrSet internal = CidrSet::parse_lines(cidr_in);
    std::ifstream log_in(log_path);
    if (!log_in) throw ConfigError("cannot open " + log_path);
    IngestStats stats;
    auto sets = ingest_hourly_sets(log_in, internal, hour, cols, &stats);
    std::cerr << "ingest: " << stats.records << " records, kept " << stats.kept << ", "
              << stats.parse_errors << " parse errors\n";
    std::vector<Element> merged;
    for (auto& [inst, elems] : sets)
        merged.insert(merged.end(), elems.begin(), elems.end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    return merged;
}

std::vector<int> parse_table_counts(const std::string& spec) {
    // "1-6" or "1,2,4"
    std::vector<int> out;
    size_t dash = spec.find('-');
    if (dash != std::string::npos) {
        int lo = std::atoi(spec.substr(0, dash).c_str());
        int hi = std::atoi(spec.substr(dash + 1).c_str());
        for (int i = lo; i <= hi; i++) out.push_back(i);
        return out;
    }
    std::istringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::atoi(tok.c_str()));
    return out;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"over-threshold multiparty private set intersection toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value configuration file");

    // ---- participant ----
    auto* part = app.add_subcommand("participant", "run one participant");
    uint32_t p_id = 0;
    std::string p_agg = "127.0.0.1:7700", p_khs, p_key, p_set, p_log, p_cidr, p_out;
    uint64_t p_hour = current_utc_hour();
    unsigned p_timeout = 60000, p_threads = 0;
    bool p_collusion_safe = false, p_gen_key = false;
    LogColumns p_cols;
    part->add_option("--id", p_id, "participant id (1-based)");
    part->add_option("--aggregator", p_agg, "aggregator host:port");
    part->add_option("--keyholders", p_khs, "comma-separated key holder host:port list");
    part->add_option("--key", p_key, "shared key file (non-interactive)");
    part->add_flag("--gen-key", p_gen_key, "generate a fresh shared key into --key and exit");
    part->add_option("--set", p_set, "element set file (IP lines or binary list)");
    part->add_option("--log", p_log, "connection log to ingest instead of --set");
    part->add_option("--internal-cidr", p_cidr, "internal prefix list for --log");
    part->add_option("--hour", p_hour, "hour bucket for --log (unix time / 3600)");
    part->add_option("--ts-col", p_cols.timestamp, "log timestamp column");
    part->add_option("--src-col", p_cols.source, "log source column");
    part->add_option("--dst-col", p_cols.destination, "log destination column");
    part->add_option("--out", p_out, "output file for the learned intersection");
    part->add_flag("--collusion-safe", p_collusion_safe, "use the key-holder deployment");
    part->add_option("--timeout-ms", p_timeout, "receive timeout");
    part->add_option("--threads", p_threads, "table build threads (0 = auto)");

    // ---- aggregator ----
    auto* agg = app.add_subcommand("aggregator", "run the aggregator");
    std::string a_listen = "127.0.0.1:7700", a_out;
    uint32_t a_n = 0;
    uint16_t a_t = 3, a_tables = 20, a_k = 0;
    uint64_t a_round = current_utc_hour();
    unsigned a_timeout = 60000, a_threads = 0;
    bool a_collusion_safe = false;
    agg->add_option("--listen", a_listen, "listen host:port");
    agg->add_option("--n", a_n, "participant count")->required();
    agg->add_option("--t", a_t, "threshold");
    agg->add_option("--tables", a_tables, "sub-table count");
    agg->add_option("--k", a_k, "key holder count (collusion-safe)");
    agg->add_option("--round", a_round, "round id (default: current UTC hour)");
    agg->add_option("--out", a_out, "hit report output file");
    agg->add_flag("--collusion-safe", a_collusion_safe, "expect the key-holder deployment");
    agg->add_option("--timeout-ms", a_timeout, "receive timeout");
    agg->add_option("--threads", a_threads, "reconstruction threads (0 = auto)");

    // ---- keyholder ----
    auto* kh = app.add_subcommand("keyholder", "run one key holder");
    std::string k_listen = "127.0.0.1:7800", k_keys;
    uint32_t k_n = 0, k_id = 1;
    uint16_t k_t = 3;
    unsigned k_timeout = 60000;
    bool k_gen_key = false;
    kh->add_option("--listen", k_listen, "listen host:port");
    kh->add_option("--participants", k_n, "number of participants to serve");
    kh->add_option("--keys", k_keys, "scalar key share file")->required();
    kh->add_flag("--gen-key", k_gen_key, "generate fresh scalars into --keys and exit");
    kh->add_option("--id", k_id, "holder id (for --gen-key)");
    kh->add_option("--t", k_t, "threshold (for --gen-key)");
    kh->add_option("--timeout-ms", k_timeout, "receive timeout");

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "run all roles in-process");
    std::vector<std::string> s_sets;
    std::string s_log, s_cidr, s_outdir;
    uint64_t s_hour = current_utc_hour(), s_seed = 1;
    uint16_t s_t = 3, s_tables = 20, s_k = 1;
    uint32_t s_n = 0, s_m = 0;
    unsigned s_threads = 0;
    bool s_collusion_safe = false, s_verbose = false;
    LogColumns s_cols;
    s_cols.institution = 0;
    s_cols.timestamp = 1;
    s_cols.source = 2;
    s_cols.destination = 3;
    sim->add_option("--set", s_sets, "per-participant set file (repeatable)");
    sim->add_option("--log", s_log, "multi-institution log; builds one set per institution");
    sim->add_option("--internal-cidr", s_cidr, "internal prefix list for --log");
    sim->add_option("--hour", s_hour, "hour bucket for --log");
    sim->add_option("--inst-col", s_cols.institution, "log institution column");
    sim->add_option("--ts-col", s_cols.timestamp, "log timestamp column");
    sim->add_option("--src-col", s_cols.source, "log source column");
    sim->add_option("--dst-col", s_cols.destination, "log destination column");
    sim->add_option("--n", s_n, "synthetic participants (with --m)");
    sim->add_option("--m", s_m, "synthetic per-set size");
    sim->add_option("--t", s_t, "threshold");
    sim->add_option("--tables", s_tables, "sub-table count");
    sim->add_option("--k", s_k, "key holders (collusion-safe)");
    sim->add_flag("--collusion-safe", s_collusion_safe, "use the key-holder deployment");
    sim->add_option("--seed", s_seed, "deterministic seed");
    sim->add_option("--out-dir", s_outdir, "write per-participant outputs here");
    sim->add_option("--threads", s_threads, "worker threads (0 = auto)");
    sim->add_flag("--verbose", s_verbose, "print transcript summary");

    // ---- bench ----
    auto* bench = app.add_subcommand("bench", "reconstruction scaling benchmark");
    std::vector<uint32_t> b_ns = {10};
    std::vector<uint64_t> b_ms = {1000, 10000, 100000};
    std::vector<uint16_t> b_ts = {3};
    uint16_t b_tables = 2;
    int b_repeats = 3;
    unsigned b_threads = 0;
    std::string b_out;
    bench->add_option("--n", b_ns, "participant counts");
    bench->add_option("--m", b_ms, "max set sizes");
    bench->add_option("--t", b_ts, "thresholds");
    bench->add_option("--tables", b_tables, "sub-table count");
    bench->add_option("--repeats", b_repeats, "repetitions (best-of)");
    bench->add_option("--threads", b_threads, "reconstruction threads");
    bench->add_option("--out", b_out, "CSV output file (default stdout)");

    // ---- analyze ----
    auto* an = app.add_subcommand("analyze", "hashing-scheme miss-rate experiment");
    uint32_t an_m = 200;
    uint16_t an_t = 4;
    std::string an_tables = "1-6", an_variant = "combined", an_out;
    uint64_t an_trials = 100000, an_seed = 1;
    unsigned an_threads = 0;
    an->add_option("--m", an_m, "set size");
    an->add_option("--t", an_t, "threshold");
    an->add_option("--tables", an_tables, "table counts, e.g. 1-6 or 1,2,4");
    an->add_option("--trials", an_trials, "trials per point");
    an->add_option("--variant", an_variant, "plain|reversed|second_insertion|combined");
    an->add_option("--seed", an_seed, "seed");
    an->add_option("--threads", an_threads, "worker threads");
    an->add_option("--out", an_out, "CSV output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    if (part->parsed()) {
        if (p_gen_key) {
            if (p_key.empty()) throw ConfigError("--gen-key needs --key");
            save_participant_key(p_key, ParticipantKey::random());
            std::cout << "wrote " << p_key << "\n";
            return 0;
        }
        NetParticipantConfig cfg;
        cfg.runtime.id = p_id;
        cfg.runtime.deployment =
            p_collusion_safe ? Deployment::CollusionSafe : Deployment::NonInteractive;
        cfg.runtime.set = load_set_from_options(p_set, p_log, p_cidr, p_hour, p_cols);
        if (!p_collusion_safe) {
            if (p_key.empty()) throw ConfigError("non-interactive deployment needs --key");
            cfg.runtime.key = load_participant_key(p_key);
        }
        cfg.runtime.threads = p_threads;
        cfg.aggregator = Endpoint::parse(p_agg);
        if (!p_khs.empty()) {
            std::istringstream ss(p_khs);
            std::string tok;
            while (std::getline(ss, tok, ',')) cfg.key_holders.push_back(Endpoint::parse(tok));
        }
        cfg.output_path = p_out;
        cfg.timeout_ms = p_timeout;
        auto result = run_participant(cfg);
        std::cout << "intersection (" << result.intersection.size() << " elements)";
        if (!p_out.empty()) std::cout << " written to " << p_out;
        std::cout << "\n";
        if (p_out.empty())
            for (const auto& e : result.intersection) std::cout << e.to_string() << "\n";
        return 0;
    }

    if (agg->parsed()) {
        NetAggregatorConfig cfg;
        cfg.runtime.n_participants = a_n;
        cfg.runtime.threshold = a_t;
        cfg.runtime.table_count = a_tables;
        cfg.runtime.n_key_holders = a_k;
        cfg.runtime.round_id = a_round;
        cfg.runtime.deployment =
            a_collusion_safe ? Deployment::CollusionSafe : Deployment::NonInteractive;
        cfg.runtime.threads = a_threads;
        cfg.listen = Endpoint::parse(a_listen);
        cfg.output_path = a_out;
        cfg.timeout_ms = a_timeout;
        auto result = run_aggregator(cfg);
        std::cout << "round " << result.params.round_id << ": " << result.report.records.size()
                  << " hit cells, " << result.stats.interpolations << " interpolations\n";
        return 0;
    }

    if (kh->parsed()) {
        if (k_gen_key) {
            Rng rng = Rng::system();
            save_key_share(k_keys, oprf::OprfKeyShare::random(k_id, k_t, rng));
            std::cout << "wrote " << k_keys << "\n";
            return 0;
        }
        if (k_n == 0) throw ConfigError("--participants is required");
        NetKeyholderConfig cfg;
        cfg.runtime.share = load_key_share(k_keys);
        cfg.runtime.n_participants = k_n;
        cfg.listen = Endpoint::parse(k_listen);
        cfg.timeout_ms = k_timeout;
        run_keyholder(cfg);
        std::cout << "served " << k_n << " participants\n";
        return 0;
    }

    if (sim->parsed()) {
        std::vector<std::vector<Element>> sets;
        std::vector<std::string> names;
        if (!s_sets.empty()) {
            for (const auto& path : s_sets) {
                sets.push_back(load_element_set(path));
                names.push_back(path);
            }
        } else if (!s_log.empty()) {
            if (s_cidr.empty()) throw ConfigError("--internal-cidr is required with --log");
            std::ifstream cidr_in(s_cidr);
            if (!cidr_in) throw ConfigError("cannot open " + s_cidr);
            CidrSet internal = CidrSet::parse_lines(cidr_in);
            std::ifstream log_in(s_log);
            if (!log_in) throw ConfigError("cannot open " + s_log);
            IngestStats stats;
            auto by_inst = ingest_hourly_sets(log_in, internal, s_hour, s_cols, &stats);
            for (auto& [inst, elems] : by_inst) {
                sets.push_back(std::move(elems));
                names.push_back(inst);
            }
            std::cerr << "ingest: " << by_inst.size() << " institutions, " << stats.kept
                      << " kept records\n";
        } else if (s_n > 0 && s_m > 0) {
            Rng rng = Rng::from_u64(s_seed).fork(0x5e75);
            Element common = Element::from_u64(rng.next_u64());
            for (uint32_t i = 0; i < s_n; i++) {
                std::vector<Element> s = {common};
                for (uint32_t j = 1; j < s_m; j++) s.push_back(Element::from_u64(rng.next_u64()));
                sets.push_back(std::move(s));
                names.push_back("p" + std::to_string(i + 1));
            }
        } else {
            throw ConfigError("give --set files, a --log, or --n/--m");
        }

        SimOptions opt;
        opt.deployment = s_collusion_safe ? Deployment::CollusionSafe : Deployment::NonInteractive;
        opt.threshold = s_t;
        opt.table_count = s_tables;
        opt.n_key_holders = s_k;
        opt.seed = s_seed;
        opt.threads = s_threads;
        auto result = simulate_local(sets, opt);

        auto truth = oracle_over_threshold(sets, s_t);
        std::cout << "participants=" << sets.size() << " t=" << s_t
                  << " M=" << result.params.max_set_size << " hits=" << result.report.records.size()
                  << " over-threshold elements=" << truth.elements.size() << "\n";
        for (size_t i = 0; i < sets.size(); i++) {
            std::cout << names[i] << ": " << result.outputs[i].size() << " element(s)";
            if (result.outputs[i].size() <= 16) {
                std::cout << " {";
                for (size_t j = 0; j < result.outputs[i].size(); j++)
                    std::cout << (j ? ", " : "") << result.outputs[i][j].to_string();
                std::cout << "}";
            }
            std::cout << "\n";
            if (!s_outdir.empty())
                write_file_atomic(s_outdir + "/participant_" + std::to_string(i + 1) + ".txt",
                                  format_element_lines(result.outputs[i]));
        }
        if (s_verbose) {
            std::cout << "rounds:";
            for (const auto& r : result.transcript.rounds()) std::cout << " " << r;
            std::cout << "\nmessages=" << result.transcript.msgs.size()
                      << " upload_bytes=" << result.shares_payload_bytes[0] << "\n";
        }
        bool ok = true;
        for (size_t i = 0; i < sets.size(); i++)
            ok = ok && result.outputs[i] == truth.intersect_with(sets[i]);
        std::cout << (ok ? "outputs match the plaintext oracle\n"
                         : "WARNING: outputs differ from the plaintext oracle\n");
        return ok ? 0 : 1;
    }

    if (bench->parsed()) {
        std::vector<BenchPoint> points;
        for (uint32_t n : b_ns)
            for (uint16_t t : b_ts)
                for (uint64_t m : b_ms) {
                    auto pt = bench_reconstruction_point(n, t, m, b_tables, 1, b_threads,
                                                         b_repeats);
                    std::cerr << "n=" << n << " t=" << t << " m=" << m << ": " << pt.seconds
                              << "s, " << pt.interpolations << " interpolations\n";
                    points.push_back(pt);
                }
        std::string csv = bench_csv(points);
        if (b_out.empty())
            std::cout << csv;
        else
            write_file_atomic(b_out, csv);
        return 0;
    }

    if (an->parsed()) {
        HashingVariant v;
        if (an_variant == "plain") v = HashingVariant::Plain;
        else if (an_variant == "reversed") v = HashingVariant::Reversed;
        else if (an_variant == "second_insertion") v = HashingVariant::SecondInsertion;
        else if (an_variant == "combined") v = HashingVariant::Combined;
        else throw ConfigError("unknown variant " + an_variant);
        auto report = monte_carlo_miss_rate(an_m, an_t, parse_table_counts(an_tables), an_trials,
                                            v, an_seed, an_threads);
        std::string csv = to_csv(report);
        if (an_out.empty())
            std::cout << csv;
        else
            write_file_atomic(an_out, csv);
        for (const auto& pt : report.points)
            if (pt.rate > pt.bound)
                std::cerr << "note: observed rate " << pt.rate << " above bound " << pt.bound
                          << " at " << pt.tables << " tables\n";
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const TimeoutError& e) {
        std::cerr << "timeout: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        std::cerr << "protocol error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
