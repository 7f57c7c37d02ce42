#pragma once

#include "mocnn/protocol.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

// Minimal blocking-with-deadline TCP helpers over POSIX sockets.
namespace mocnn::net {

using Clock = std::chrono::steady_clock;

struct HostPort {
    std::string host;
    std::uint16_t port = 0;

    std::string str() const { return host + ":" + std::to_string(port); }
};

/// "host:port"; throws std::invalid_argument.
HostPort parseHostPort(std::string_view text);

class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    ~Socket();
    Socket(Socket&& other) noexcept;
    Socket& operator=(Socket&& other) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    static Socket connect(const HostPort& to, Clock::time_point deadline, const std::atomic<bool>* cancel = nullptr);

    void sendAll(std::string_view data, Clock::time_point deadline, const std::atomic<bool>* cancel = nullptr);

    /// Fills `n` bytes. Returns false on orderly EOF before the first byte;
    /// throws TransportError on timeout, cancellation, reset or mid-read EOF.
    bool recvExact(char* buf, std::size_t n, Clock::time_point deadline, const std::atomic<bool>* cancel = nullptr);

    /// Wakes any thread blocked on this socket.
    void shutdown() noexcept;
    void close() noexcept;

    int fd() const { return fd_; }
    explicit operator bool() const { return fd_ >= 0; }

private:
    int fd_ = -1;
};

class Listener {
public:
    static Listener bind(const HostPort& at);

    /// Waits up to `wait` for a connection.
    std::optional<Socket> accept(std::chrono::milliseconds wait);
    std::uint16_t port() const { return port_; }
    void close() noexcept { socket_.close(); }

private:
    Socket socket_;
    std::uint16_t port_ = 0;
};

/// Reads one frame's payload. Returns nullopt on orderly EOF between frames.
/// Throws protocol::MalformedFrame if the header announces more than the cap.
std::optional<std::string> readFrame(Socket& s, Clock::time_point deadline, const std::atomic<bool>* cancel = nullptr);
void writeFrame(Socket& s, const protocol::Json& message, Clock::time_point deadline,
                const std::atomic<bool>* cancel = nullptr);

} // namespace mocnn::net
