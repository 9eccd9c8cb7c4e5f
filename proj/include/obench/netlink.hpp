#pragma once

// Emulated client-server link: closed-form transfer model used in model mode
// and the token bucket that paces the live shaping proxy.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <string>

#include "obench/error.hpp"

namespace obench {

inline constexpr std::size_t kPacingChunkBytes = 16 * 1024;
inline constexpr std::size_t kDefaultBucketBytes = 64 * 1024;

struct LinkParams {
  double rate_bps = 100e6;
  double latency_s = 0.0;  // one-way
  std::size_t bucket_bytes = kDefaultBucketBytes;

  static LinkParams from_mbps(double rate_mbps, double latency_ms = 0.0,
                              std::size_t bucket = kDefaultBucketBytes) {
    return {rate_mbps * 1e6, latency_ms * 1e-3, bucket};
  }

  void validate() const {
    if (!(rate_bps > 0.0)) throw InvalidArgument("link rate must be positive");
    if (!(latency_s >= 0.0)) throw InvalidArgument("link latency must be >= 0");
    if (bucket_bytes < kPacingChunkBytes) {
      throw InvalidArgument("bucket must hold at least one pacing chunk (" +
                            std::to_string(kPacingChunkBytes) + " bytes)");
    }
  }
};

// Serialization plus propagation: latency + 8*nbytes/rate. No TCP dynamics.
inline double transfer_time(const LinkParams& link, std::uint64_t nbytes) {
  return link.latency_s + 8.0 * static_cast<double>(nbytes) / link.rate_bps;
}

// Single-class token bucket. Tokens (bytes) accrue at rate/8 per second up to
// `capacity`; the bucket starts full. reserve() debits a send and returns the
// instant it may go out, letting the balance go negative so back-to-back
// reservations queue behind each other.
class TokenBucket {
 public:
  using Clock = std::chrono::steady_clock;

  TokenBucket(double rate_bps, double capacity_bytes, Clock::time_point start)
      : bytes_per_second_(rate_bps / 8.0),
        capacity_(capacity_bytes),
        tokens_(capacity_bytes),
        last_(start) {}

  Clock::time_point reserve(std::size_t bytes, Clock::time_point now) {
    refill(now);
    const double need = static_cast<double>(bytes);
    if (tokens_ >= need) {
      tokens_ -= need;
      return now;
    }
    const double deficit = need - tokens_;
    tokens_ -= need;
    return now + std::chrono::duration_cast<Clock::duration>(
                     std::chrono::duration<double>(deficit / bytes_per_second_));
  }

  double tokens(Clock::time_point now) {
    refill(now);
    return tokens_;
  }

 private:
  void refill(Clock::time_point now) {
    if (now <= last_) return;
    const double dt = std::chrono::duration<double>(now - last_).count();
    tokens_ = std::min(capacity_, tokens_ + dt * bytes_per_second_);
    last_ = now;
  }

  double bytes_per_second_;
  double capacity_;
  double tokens_;
  Clock::time_point last_;
};

}  // namespace obench
