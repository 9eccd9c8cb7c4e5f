#pragma once

// Validates an emulated link end to end: a bulk upload through the proxy to
// an OffloadServer's sink measures achieved throughput, and small echoes give
// the round-trip floor.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "httplib.h"
#include "obench/error.hpp"
#include "obench/socket.hpp"

namespace obench {

struct LinkReport {
  double configured_bps = 0.0;
  double measured_bps = 0.0;
  double rtt_floor_s = 0.0;
  std::size_t bytes = 0;
  double elapsed_s = 0.0;
  double tolerance = 0.10;
  bool pass = false;

  double relative_error() const { return std::abs(measured_bps - configured_bps) / configured_bps; }
};

inline constexpr std::size_t kSelftestEchoBytes = 1024;

inline LinkReport selftest_link(const Endpoint& proxy, double rate_bps, std::size_t nbytes,
                                double tolerance = 0.10, int echo_trials = 5) {
  if (!(rate_bps > 0.0)) throw InvalidArgument("selftest rate must be positive");
  httplib::Client client(proxy.host, proxy.port);
  client.set_connection_timeout(10, 0);
  client.set_read_timeout(600, 0);
  client.set_write_timeout(600, 0);

  using Clock = std::chrono::steady_clock;
  LinkReport report;
  report.configured_bps = rate_bps;
  report.bytes = nbytes;
  report.tolerance = tolerance;

  const std::string echo(kSelftestEchoBytes, 'e');
  report.rtt_floor_s = std::numeric_limits<double>::infinity();
  for (int i = 0; i < echo_trials; ++i) {
    const auto t0 = Clock::now();
    auto res = client.Post("/selftest/echo", echo, "application/octet-stream");
    const auto t1 = Clock::now();
    if (!res) {
      throw OffloadUnreachable("link selftest: proxy " + proxy.to_string() +
                               " unreachable: " + httplib::to_string(res.error()));
    }
    if (res->status != 200 || res->body != echo) {
      throw RemoteError(res->status, "echo through proxy was not returned intact");
    }
    report.rtt_floor_s =
        std::min(report.rtt_floor_s, std::chrono::duration<double>(t1 - t0).count());
  }

  const std::string bulk(nbytes, 'x');
  const auto t0 = Clock::now();
  auto res = client.Post("/selftest/sink", bulk, "application/octet-stream");
  const auto t1 = Clock::now();
  if (!res) {
    throw OffloadUnreachable("link selftest: bulk transfer failed: " +
                             httplib::to_string(res.error()));
  }
  if (res->status != 200 || res->body != std::to_string(nbytes)) {
    throw RemoteError(res->status, "sink did not acknowledge " + std::to_string(nbytes) + " bytes");
  }
  report.elapsed_s = std::chrono::duration<double>(t1 - t0).count();
  report.measured_bps = 8.0 * static_cast<double>(nbytes) / report.elapsed_s;
  report.pass = report.relative_error() <= tolerance;
  return report;
}

}  // namespace obench
