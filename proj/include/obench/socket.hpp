#pragma once

// Minimal POSIX TCP helpers shared by the shaping proxy and tests.

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "obench/error.hpp"

namespace obench {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string to_string() const { return host + ":" + std::to_string(port); }

  // "host:port"; a bare ":port" or "port" means 127.0.0.1.
  static Endpoint parse(std::string_view text) {
    Endpoint ep;
    std::string_view port_part = text;
    if (auto colon = text.rfind(':'); colon != std::string_view::npos) {
      if (colon > 0) ep.host = std::string(text.substr(0, colon));
      port_part = text.substr(colon + 1);
    }
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(port_part.data(), port_part.data() + port_part.size(), value);
    if (ec != std::errc{} || ptr != port_part.data() + port_part.size() || value > 65535 ||
        port_part.empty()) {
      throw InvalidArgument("bad endpoint '" + std::string(text) + "', expected host:port");
    }
    ep.port = static_cast<std::uint16_t>(value);
    return ep;
  }

  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      close();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }

  void close() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

  void shutdown(int how) const noexcept {
    if (fd_ >= 0) ::shutdown(fd_, how);
  }

  // Blocks until all bytes are written. False on error or peer reset.
  bool send_all(std::span<const std::uint8_t> data) const {
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      off += static_cast<std::size_t>(n);
    }
    return true;
  }

  // >0 bytes read, 0 on orderly EOF, -1 on error.
  ssize_t recv_some(std::span<std::uint8_t> buf) const {
    while (true) {
      const ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
      if (n < 0 && errno == EINTR) continue;
      return n;
    }
  }

 private:
  int fd_ = -1;
};

inline addrinfo* resolve(const Endpoint& ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(ep.port);
  if (int rc = ::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw StartupError("cannot resolve " + ep.to_string() + ": " + ::gai_strerror(rc));
  }
  return res;
}

inline std::uint16_t local_port(const Socket& s) {
  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  ::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  if (addr.ss_family == AF_INET6) {
    return ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port);
  }
  return ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
}

inline Socket listen_tcp(const Endpoint& ep, int backlog = 16) {
  addrinfo* res = resolve(ep, true);
  std::string last_error = "no address";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (!s.valid()) continue;
    int one = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(s.fd(), backlog) == 0) {
      ::freeaddrinfo(res);
      return s;
    }
    last_error = std::strerror(errno);
  }
  ::freeaddrinfo(res);
  throw StartupError("cannot listen on " + ep.to_string() + ": " + last_error);
}

inline Socket connect_tcp(const Endpoint& ep) {
  addrinfo* res = resolve(ep, false);
  std::string last_error = "no address";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (!s.valid()) continue;
    if (::connect(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
      ::freeaddrinfo(res);
      int one = 1;
      ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return s;
    }
    last_error = std::strerror(errno);
  }
  ::freeaddrinfo(res);
  throw StartupError("cannot connect to " + ep.to_string() + ": " + last_error);
}

// Accepts one connection, waiting at most timeout_ms. Invalid socket on timeout.
inline Socket accept_for(const Socket& listener, int timeout_ms) {
  pollfd p{listener.fd(), POLLIN, 0};
  if (::poll(&p, 1, timeout_ms) <= 0) return Socket{};
  Socket s(::accept(listener.fd(), nullptr, nullptr));
  if (s.valid()) {
    int one = 1;
    ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  return s;
}

}  // namespace obench
