#pragma once

// Loopback TCP proxy that emulates a shaped link. Each direction of each
// connection is paced by its own token bucket and delayed by the one-way
// latency. Bytes are forwarded unchanged.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <list>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "obench/netlink.hpp"
#include "obench/socket.hpp"

namespace obench {

namespace detail {

struct Chunk {
  std::vector<std::uint8_t> bytes;
  std::chrono::steady_clock::time_point arrival;
};

class ProxyConnection;

// One direction: a reader filling a bounded delay line and a writer draining
// it at the shaped rate.
class Pipe {
 public:
  Pipe(const Socket& src, const Socket& dst, const LinkParams& link, ProxyConnection& owner)
      : src_(src),
        dst_(dst),
        latency_(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(link.latency_s))),
        bucket_(link.rate_bps, static_cast<double>(link.bucket_bytes),
                std::chrono::steady_clock::now()),
        max_queued_(link.bucket_bytes + 4 * kPacingChunkBytes +
                    static_cast<std::size_t>(link.rate_bps / 8.0 * link.latency_s)),
        owner_(owner) {}

  void start();
  void join() {
    if (reader_.joinable()) reader_.join();
    if (writer_.joinable()) writer_.join();
  }

  void abort() {
    std::lock_guard lock(mu_);
    aborted_ = true;
    cv_.notify_all();
  }

  std::uint64_t forwarded() const { return forwarded_.load(); }

 private:
  void read_loop();
  void write_loop();

  const Socket& src_;
  const Socket& dst_;
  std::chrono::steady_clock::duration latency_;
  TokenBucket bucket_;
  std::size_t max_queued_;
  ProxyConnection& owner_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Chunk> queue_;
  std::size_t queued_bytes_ = 0;
  bool eof_ = false;
  bool aborted_ = false;
  std::atomic<std::uint64_t> forwarded_{0};

  std::thread reader_;
  std::thread writer_;
};

class ProxyConnection {
 public:
  ProxyConnection(Socket client, Socket upstream, const LinkParams& link)
      : client_(std::move(client)),
        upstream_(std::move(upstream)),
        up_(client_, upstream_, link, *this),
        down_(upstream_, client_, link, *this) {}

  ~ProxyConnection() {
    abort();
    join();
  }

  void start() {
    up_.start();
    down_.start();
  }

  // Hard close of both sides, e.g. after a peer reset or on proxy shutdown.
  void abort() {
    client_.shutdown(SHUT_RDWR);
    upstream_.shutdown(SHUT_RDWR);
    up_.abort();
    down_.abort();
  }

  void join() {
    up_.join();
    down_.join();
  }

  void thread_done() { --live_threads_; }
  bool finished() const { return live_threads_.load() == 0; }

  std::uint64_t bytes_upstream() const { return up_.forwarded(); }
  std::uint64_t bytes_downstream() const { return down_.forwarded(); }

 private:
  Socket client_;
  Socket upstream_;
  Pipe up_;
  Pipe down_;
  std::atomic<int> live_threads_{4};
};

inline void Pipe::start() {
  reader_ = std::thread([this] {
    read_loop();
    owner_.thread_done();
  });
  writer_ = std::thread([this] {
    write_loop();
    owner_.thread_done();
  });
}

inline void Pipe::read_loop() {
  while (true) {
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return aborted_ || queued_bytes_ < max_queued_; });
      if (aborted_) return;
    }
    Chunk chunk;
    chunk.bytes.resize(kPacingChunkBytes);
    const ssize_t n = src_.recv_some(chunk.bytes);
    if (n < 0) {
      owner_.abort();
      return;
    }
    std::lock_guard lock(mu_);
    if (n == 0) {
      eof_ = true;
      cv_.notify_all();
      return;
    }
    chunk.bytes.resize(static_cast<std::size_t>(n));
    chunk.arrival = std::chrono::steady_clock::now();
    queued_bytes_ += chunk.bytes.size();
    queue_.push_back(std::move(chunk));
    cv_.notify_all();
  }
}

inline void Pipe::write_loop() {
  while (true) {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return aborted_ || eof_ || !queue_.empty(); });
    if (aborted_) return;
    if (queue_.empty()) {
      // eof_ and drained: propagate the half-close.
      dst_.shutdown(SHUT_WR);
      return;
    }
    Chunk chunk = std::move(queue_.front());
    queue_.pop_front();

    auto release_at = chunk.arrival + latency_;
    if (cv_.wait_until(lock, release_at, [&] { return aborted_; })) return;
    release_at = bucket_.reserve(chunk.bytes.size(), std::chrono::steady_clock::now());
    if (cv_.wait_until(lock, release_at, [&] { return aborted_; })) return;
    lock.unlock();

    if (!dst_.send_all(chunk.bytes)) {
      owner_.abort();
      return;
    }
    forwarded_ += chunk.bytes.size();

    lock.lock();
    queued_bytes_ -= chunk.bytes.size();
    cv_.notify_all();
  }
}

}  // namespace detail

class ShapingProxy {
 public:
  // Binds immediately; bind failure throws StartupError. Port 0 picks an
  // ephemeral port, see endpoint().
  ShapingProxy(const Endpoint& listen, Endpoint upstream, LinkParams link)
      : upstream_(std::move(upstream)), link_(link) {
    link_.validate();
    listener_ = listen_tcp(listen);
    endpoint_ = {listen.host, local_port(listener_)};
    accept_thread_ = std::thread([this] { accept_loop(); });
  }

  ShapingProxy(const ShapingProxy&) = delete;
  ShapingProxy& operator=(const ShapingProxy&) = delete;

  ~ShapingProxy() { stop(); }

  void stop() {
    if (stopping_.exchange(true)) return;
    if (accept_thread_.joinable()) accept_thread_.join();
    std::lock_guard lock(mu_);
    for (auto& c : connections_) c->abort();
    connections_.clear();
  }

  const Endpoint& endpoint() const { return endpoint_; }
  const LinkParams& link() const { return link_; }

  std::uint64_t accepted() const { return accepted_.load(); }
  std::uint64_t upstream_failures() const { return upstream_failures_.load(); }

  // Bytes forwarded over connections that have already finished.
  std::uint64_t bytes_upstream() const { return closed_up_.load(); }
  std::uint64_t bytes_downstream() const { return closed_down_.load(); }

 private:
  void accept_loop() {
    while (!stopping_.load()) {
      Socket client = accept_for(listener_, 50);
      reap();
      if (!client.valid()) continue;
      ++accepted_;
      Socket upstream;
      try {
        upstream = connect_tcp(upstream_);
      } catch (const StartupError&) {
        ++upstream_failures_;
        continue;  // client socket closes here
      }
      auto conn = std::make_unique<detail::ProxyConnection>(std::move(client),
                                                            std::move(upstream), link_);
      conn->start();
      std::lock_guard lock(mu_);
      connections_.push_back(std::move(conn));
    }
  }

  void reap() {
    std::lock_guard lock(mu_);
    for (auto it = connections_.begin(); it != connections_.end();) {
      if ((*it)->finished()) {
        (*it)->join();
        closed_up_ += (*it)->bytes_upstream();
        closed_down_ += (*it)->bytes_downstream();
        it = connections_.erase(it);
      } else {
        ++it;
      }
    }
  }

  Endpoint upstream_;
  LinkParams link_;
  Socket listener_;
  Endpoint endpoint_;
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> accepted_{0};
  std::atomic<std::uint64_t> upstream_failures_{0};
  std::atomic<std::uint64_t> closed_up_{0};
  std::atomic<std::uint64_t> closed_down_{0};
  std::mutex mu_;
  std::list<std::unique_ptr<detail::ProxyConnection>> connections_;
  std::thread accept_thread_;
};

}  // namespace obench
