#include "socket.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <memory>
#include <utility>

namespace mocnn::net {

using protocol::TransportError;

namespace {

constexpr auto kPollSlice = std::chrono::milliseconds(50);

void setNonBlocking(int fd)
{
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

std::string lastError(const char* what)
{
    return std::string(what) + ": " + std::strerror(errno);
}

// Waits for `events` on fd until the deadline, polling in slices so a
// cancellation flag is noticed promptly.
void waitFor(int fd, short events, Clock::time_point deadline, const std::atomic<bool>* cancel)
{
    while (true) {
        if (cancel && cancel->load()) {
            throw TransportError("cancelled");
        }
        const auto now = Clock::now();
        if (now >= deadline) {
            throw TransportError("timed out");
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
        pollfd p{fd, events, 0};
        const int rc = ::poll(&p, 1, static_cast<int>(std::min(left, kPollSlice).count()) + 1);
        if (rc < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw TransportError(lastError("poll"));
        }
        if (rc > 0) {
            return;
        }
    }
}

} // namespace

HostPort parseHostPort(std::string_view text)
{
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size()) {
        throw std::invalid_argument("address '" + std::string(text) + "' is not host:port");
    }
    unsigned port = 0;
    const auto digits = text.substr(colon + 1);
    const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), port);
    if (res.ec != std::errc{} || res.ptr != digits.data() + digits.size() || port > 65535) {
        throw std::invalid_argument("address '" + std::string(text) + "' has an invalid port");
    }
    return {std::string(text.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

Socket::~Socket()
{
    close();
}

Socket::Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}

Socket& Socket::operator=(Socket&& other) noexcept
{
    if (this != &other) {
        close();
        fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
}

void Socket::shutdown() noexcept
{
    if (fd_ >= 0) {
        ::shutdown(fd_, SHUT_RDWR);
    }
}

void Socket::close() noexcept
{
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

Socket Socket::connect(const HostPort& to, Clock::time_point deadline, const std::atomic<bool>* cancel)
{
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* found = nullptr;
    const auto service = std::to_string(to.port);
    if (const int rc = ::getaddrinfo(to.host.c_str(), service.c_str(), &hints, &found); rc != 0) {
        throw TransportError("resolve " + to.str() + ": " + ::gai_strerror(rc));
    }
    std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(found, &::freeaddrinfo);

    std::string lastFailure = "no addresses";
    for (auto* ai = found; ai != nullptr; ai = ai->ai_next) {
        Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
        if (!s) {
            lastFailure = lastError("socket");
            continue;
        }
        setNonBlocking(s.fd());
        if (::connect(s.fd(), ai->ai_addr, ai->ai_addrlen) != 0 && errno != EINPROGRESS) {
            lastFailure = lastError("connect");
            continue;
        }
        waitFor(s.fd(), POLLOUT, deadline, cancel);
        int err = 0;
        socklen_t len = sizeof err;
        ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
        if (err != 0) {
            lastFailure = std::string("connect: ") + std::strerror(err);
            continue;
        }
        const int one = 1;
        ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        return s;
    }
    throw TransportError(to.str() + ": " + lastFailure);
}

void Socket::sendAll(std::string_view data, Clock::time_point deadline, const std::atomic<bool>* cancel)
{
    std::size_t sent = 0;
    while (sent < data.size()) {
        const auto n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n > 0) {
            sent += static_cast<std::size_t>(n);
            continue;
        }
        if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR)) {
            waitFor(fd_, POLLOUT, deadline, cancel);
            continue;
        }
        throw TransportError(lastError("send"));
    }
}

bool Socket::recvExact(char* buf, std::size_t n, Clock::time_point deadline, const std::atomic<bool>* cancel)
{
    std::size_t got = 0;
    while (got < n) {
        const auto r = ::recv(fd_, buf + got, n - got, 0);
        if (r > 0) {
            got += static_cast<std::size_t>(r);
            continue;
        }
        if (r == 0) {
            if (got == 0) {
                return false;
            }
            throw TransportError("connection closed mid-frame");
        }
        if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) {
            waitFor(fd_, POLLIN, deadline, cancel);
            continue;
        }
        throw TransportError(lastError("recv"));
    }
    return true;
}

Listener Listener::bind(const HostPort& at)
{
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* found = nullptr;
    const auto service = std::to_string(at.port);
    const char* host = at.host.empty() || at.host == "*" ? nullptr : at.host.c_str();
    if (const int rc = ::getaddrinfo(host, service.c_str(), &hints, &found); rc != 0) {
        throw std::runtime_error("resolve " + at.str() + ": " + ::gai_strerror(rc));
    }
    std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(found, &::freeaddrinfo);

    for (auto* ai = found; ai != nullptr; ai = ai->ai_next) {
        Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
        if (!s) {
            continue;
        }
        const int one = 1;
        ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (::bind(s.fd(), ai->ai_addr, ai->ai_addrlen) != 0 || ::listen(s.fd(), 64) != 0) {
            continue;
        }
        setNonBlocking(s.fd());
        sockaddr_storage addr{};
        socklen_t len = sizeof addr;
        ::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
        Listener l;
        l.port_ = ntohs(addr.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port
                                                   : reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
        l.socket_ = std::move(s);
        return l;
    }
    throw std::runtime_error("cannot bind " + at.str() + ": " + std::strerror(errno));
}

std::optional<Socket> Listener::accept(std::chrono::milliseconds wait)
{
    if (!socket_) {
        return std::nullopt;
    }
    pollfd p{socket_.fd(), POLLIN, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(wait.count()));
    if (rc <= 0) {
        return std::nullopt;
    }
    const int fd = ::accept(socket_.fd(), nullptr, nullptr);
    if (fd < 0) {
        return std::nullopt;
    }
    Socket s(fd);
    setNonBlocking(fd);
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return s;
}

std::optional<std::string> readFrame(Socket& s, Clock::time_point deadline, const std::atomic<bool>* cancel)
{
    char header[protocol::kHeaderBytes];
    if (!s.recvExact(header, sizeof header, deadline, cancel)) {
        return std::nullopt;
    }
    const auto n = protocol::decodeLength(std::string_view(header, sizeof header));
    if (n > protocol::kMaxFrameBytes) {
        throw protocol::MalformedFrame("frame of " + std::to_string(n) + " bytes exceeds the "
                                       + std::to_string(protocol::kMaxFrameBytes) + "-byte cap");
    }
    std::string payload(n, '\0');
    if (n > 0 && !s.recvExact(payload.data(), n, deadline, cancel)) {
        throw TransportError("connection closed mid-frame");
    }
    return payload;
}

void writeFrame(Socket& s, const protocol::Json& message, Clock::time_point deadline, const std::atomic<bool>* cancel)
{
    s.sendAll(protocol::encodeFrame(message), deadline, cancel);
}

} // namespace mocnn::net
