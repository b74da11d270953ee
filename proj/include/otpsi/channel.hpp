#pragma once

#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <condition_variable>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <span>
#include <string>

#include "otpsi/common.hpp"

namespace otpsi {

/// Reliable byte stream; the frame codec sits on top. Both transports
/// (TCP and the in-process queue used by the simulator) model the same
/// stream semantics so the produced bytes are identical.
class Channel {
public:
    virtual ~Channel() = default;
    virtual void send(std::span<const uint8_t> data) = 0;
    virtual void recv_exact(std::span<uint8_t> out) = 0;
};

// ---- in-process stream ----------------------------------------------------

class MemPipe {
public:
    void write(std::span<const uint8_t> data) {
        std::lock_guard<std::mutex> lk(mu_);
        buf_.insert(buf_.end(), data.begin(), data.end());
        cv_.notify_all();
    }
    void read_exact(std::span<uint8_t> out) {
        std::unique_lock<std::mutex> lk(mu_);
        size_t done = 0;
        while (done < out.size()) {
            cv_.wait(lk, [&] { return !buf_.empty() || closed_; });
            if (buf_.empty() && closed_) throw ProtocolError("peer closed in-process stream");
            size_t n = std::min(out.size() - done, buf_.size());
            std::copy(buf_.begin(), buf_.begin() + long(n), out.begin() + long(done));
            buf_.erase(buf_.begin(), buf_.begin() + long(n));
            done += n;
        }
    }
    void close() {
        std::lock_guard<std::mutex> lk(mu_);
        closed_ = true;
        cv_.notify_all();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<uint8_t> buf_;
    bool closed_ = false;
};

/// One endpoint of a bidirectional in-memory connection.
class MemChannel final : public Channel {
public:
    MemChannel(std::shared_ptr<MemPipe> out, std::shared_ptr<MemPipe> in)
        : out_(std::move(out)), in_(std::move(in)) {}

    static std::pair<std::unique_ptr<MemChannel>, std::unique_ptr<MemChannel>> pair() {
        auto a2b = std::make_shared<MemPipe>();
        auto b2a = std::make_shared<MemPipe>();
        return {std::make_unique<MemChannel>(a2b, b2a), std::make_unique<MemChannel>(b2a, a2b)};
    }

    void send(std::span<const uint8_t> data) override { out_->write(data); }
    void recv_exact(std::span<uint8_t> out) override { in_->read_exact(out); }

private:
    std::shared_ptr<MemPipe> out_, in_;
};

// ---- TCP -------------------------------------------------------------------

class TcpChannel final : public Channel {
public:
    explicit TcpChannel(int fd) : fd_(fd) {
        int one = 1;
        setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    }
    ~TcpChannel() override {
        if (fd_ >= 0) ::close(fd_);
    }
    TcpChannel(const TcpChannel&) = delete;
    TcpChannel& operator=(const TcpChannel&) = delete;

    void set_recv_timeout_ms(unsigned ms) {
        timeval tv{};
        tv.tv_sec = ms / 1000;
        tv.tv_usec = (ms % 1000) * 1000;
        setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
    }

    void send(std::span<const uint8_t> data) override {
        size_t done = 0;
        while (done < data.size()) {
            ssize_t n = ::send(fd_, data.data() + done, data.size() - done, MSG_NOSIGNAL);
            if (n <= 0) throw ProtocolError("socket send failed");
            done += size_t(n);
        }
    }

    void recv_exact(std::span<uint8_t> out) override {
        size_t done = 0;
        while (done < out.size()) {
            ssize_t n = ::recv(fd_, out.data() + done, out.size() - done, 0);
            if (n == 0) throw ProtocolError("peer closed connection");
            if (n < 0) {
                if (errno == EAGAIN || errno == EWOULDBLOCK) throw TimeoutError();
                throw ProtocolError("socket recv failed");
            }
            done += size_t(n);
        }
    }

    static std::unique_ptr<TcpChannel> connect(const std::string& host, uint16_t port,
                                               unsigned retry_ms = 10000) {
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(port);
        if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
            throw ConfigError("bad IPv4 address: " + host);
        unsigned waited = 0;
        while (true) {
            int fd = ::socket(AF_INET, SOCK_STREAM, 0);
            if (fd < 0) throw ProtocolError("socket() failed");
            if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0)
                return std::make_unique<TcpChannel>(fd);
            ::close(fd);
            if (waited >= retry_ms) throw TimeoutError();
            usleep(50 * 1000);  // peer may not be listening yet
            waited += 50;
        }
    }

private:
    int fd_;
};

class TcpListener {
public:
    TcpListener(const std::string& host, uint16_t port) {
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd_ < 0) throw ProtocolError("socket() failed");
        int one = 1;
        setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(port);
        if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
            throw ConfigError("bad IPv4 address: " + host);
        if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
            throw ProtocolError("bind failed on " + host + ":" + std::to_string(port));
        if (::listen(fd_, 64) != 0) throw ProtocolError("listen failed");
    }
    ~TcpListener() {
        if (fd_ >= 0) ::close(fd_);
    }
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    uint16_t port() const {
        sockaddr_in addr{};
        socklen_t len = sizeof(addr);
        getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        return ntohs(addr.sin_port);
    }

    std::unique_ptr<TcpChannel> accept() {
        int fd = ::accept(fd_, nullptr, nullptr);
        if (fd < 0) throw ProtocolError("accept failed");
        return std::make_unique<TcpChannel>(fd);
    }

private:
    int fd_;
};

/// Channel wrapper that mirrors every sent byte into a log; the
/// transcript tests compare these streams between transports.
class RecordingChannel final : public Channel {
public:
    RecordingChannel(Channel& inner, Bytes* sent_log) : inner_(inner), sent_(sent_log) {}

    void send(std::span<const uint8_t> data) override {
        if (sent_) sent_->insert(sent_->end(), data.begin(), data.end());
        inner_.send(data);
    }
    void recv_exact(std::span<uint8_t> out) override { inner_.recv_exact(out); }

private:
    Channel& inner_;
    Bytes* sent_;
};

}  // namespace otpsi
