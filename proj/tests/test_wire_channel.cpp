#include <gtest/gtest.h>

#include <thread>

#include "otpsi/wire.hpp"
#include "test_util.hpp"

using namespace otpsi;

namespace {

TEST(Wire, FrameRoundTrip) {
    auto [a, b] = MemChannel::pair();
    Bytes payload = {1, 2, 3, 4, 5};
    send_frame(*a, MsgType::Shares, payload);
    Frame f = recv_frame(*b);
    EXPECT_EQ(f.type, MsgType::Shares);
    EXPECT_EQ(f.payload, payload);
    send_frame(*a, MsgType::Bye, {});
    f = recv_frame(*b);
    EXPECT_EQ(f.type, MsgType::Bye);
    EXPECT_TRUE(f.payload.empty());
}

TEST(Wire, FrameHeaderIsElevenBytes) {
    Bytes f = encode_frame(MsgType::Params, Bytes{9, 9});
    EXPECT_EQ(f.size(), kFrameHeaderBytes + 2);
    EXPECT_EQ(f[0], 'O');
    EXPECT_EQ(f[6], uint8_t(MsgType::Params));
}

TEST(Wire, RejectsBadMagicVersionAndType) {
    {
        auto [a, b] = MemChannel::pair();
        Bytes f = encode_frame(MsgType::Params, {});
        f[0] = 'X';
        a->send(f);
        EXPECT_THROW(recv_frame(*b), ProtocolError);
    }
    {
        auto [a, b] = MemChannel::pair();
        Bytes f = encode_frame(MsgType::Params, {});
        put_u16_le(f.data() + 4, 9);  // future version
        a->send(f);
        EXPECT_THROW(recv_frame(*b), ProtocolError);
    }
    {
        auto [a, b] = MemChannel::pair();
        Bytes f = encode_frame(MsgType::Params, {});
        f[6] = 42;  // unknown type
        a->send(f);
        EXPECT_THROW(recv_frame(*b), ProtocolError);
    }
    {
        auto [a, b] = MemChannel::pair();
        send_frame(*a, MsgType::Hits, Bytes(4));
        EXPECT_THROW(expect_frame(*b, MsgType::Shares), ProtocolError);
    }
}

TEST(Wire, ParamsPayloadsRoundTrip) {
    ParamsHello hello{7, 123456, 1};
    auto hello2 = ParamsHello::decode(hello.encode());
    EXPECT_EQ(hello2.participant_id, 7u);
    EXPECT_EQ(hello2.set_size, 123456u);
    EXPECT_EQ(hello2.deployment, 1);

    ParamsBroadcast bc{9, 4, 5000, 3, 0xdeadbeef, 20, 20000};
    auto bc2 = ParamsBroadcast::decode(bc.encode());
    EXPECT_EQ(bc2.n_participants, 9u);
    EXPECT_EQ(bc2.threshold, 4);
    EXPECT_EQ(bc2.max_set_size, 5000u);
    EXPECT_EQ(bc2.n_key_holders, 3);
    EXPECT_EQ(bc2.round_id, 0xdeadbeefu);
    EXPECT_EQ(bc2.table_count, 20);
    EXPECT_EQ(bc2.bin_count, 20000u);
    EXPECT_THROW(ParamsHello::decode(Bytes(5)), ProtocolError);
}

TEST(Wire, PointBatchRoundTrip) {
    Rng rng = Rng::from_u64(3);
    std::vector<oprf::GroupElement> pts(5);
    for (auto& p : pts) {
        Bytes x(8);
        rng.fill(x);
        p = oprf::hash_to_group(x);
    }
    Bytes wire = encode_point_batch(pts);
    EXPECT_EQ(wire.size(), 4u + 5u * 32u);
    EXPECT_EQ(decode_point_batch(wire), pts);
    wire.pop_back();
    EXPECT_THROW(decode_point_batch(wire), ProtocolError);
}

TEST(Wire, CellListRoundTrip) {
    std::vector<Cell> cells = {{1, 0}, {20, 99999}};
    Bytes wire = encode_cells(cells);
    EXPECT_EQ(decode_cells(wire), cells);
    EXPECT_TRUE(decode_cells(encode_cells({})).empty());
}

TEST(Channels, MemStreamDeliversAcrossThreads) {
    auto [a, b] = MemChannel::pair();
    std::thread writer([&] {
        for (int i = 0; i < 100; i++) {
            Bytes msg(17, uint8_t(i));
            a->send(msg);
        }
    });
    for (int i = 0; i < 100; i++) {
        Bytes got(17);
        b->recv_exact(got);
        ASSERT_EQ(got, Bytes(17, uint8_t(i)));
    }
    writer.join();
}

TEST(Channels, TcpLoopbackFrames) {
    TcpListener listener("127.0.0.1", 0);
    uint16_t port = listener.port();
    std::thread server([&] {
        auto ch = listener.accept();
        Frame f = recv_frame(*ch);
        send_frame(*ch, MsgType::Hits, f.payload);  // echo
    });
    auto client = TcpChannel::connect("127.0.0.1", port);
    Bytes payload(100000);
    Rng rng = Rng::from_u64(4);
    rng.fill(payload);
    send_frame(*client, MsgType::Shares, payload);
    Frame back = recv_frame(*client);
    EXPECT_EQ(back.type, MsgType::Hits);
    EXPECT_EQ(back.payload, payload);
    server.join();
}

TEST(Channels, TcpRecvTimeout) {
    TcpListener listener("127.0.0.1", 0);
    auto client = TcpChannel::connect("127.0.0.1", listener.port());
    auto server = listener.accept();
    server->set_recv_timeout_ms(100);
    Bytes buf(1);
    EXPECT_THROW(server->recv_exact(buf), TimeoutError);
}

TEST(Channels, RecordingChannelMirrorsBytes) {
    auto [a, b] = MemChannel::pair();
    Bytes log;
    RecordingChannel rec(*a, &log);
    send_frame(rec, MsgType::Params, Bytes{1, 2, 3});
    Frame f = recv_frame(*b);
    EXPECT_EQ(log, encode_frame(MsgType::Params, Bytes{1, 2, 3}));
    EXPECT_EQ(f.payload, (Bytes{1, 2, 3}));
}

}  // namespace
