#pragma once

// Function-call offloading over HTTP/1.1.
//
//   POST /invoke/{mul|inv|ln}
//   Content-Type: application/json | application/octet-stream
//   Content-Length: <n>            (chunked bodies are refused with 411)
//
// The response carries the result in the request's codec plus
// X-Srv-Decode-Us, X-Srv-Exec-Us and X-Srv-Encode-Us (integer microseconds).
// Errors: 404 unknown function, 415 unknown content type, 400 malformed
// payload, 422 kernel domain error, each with a text/plain diagnostic.
//
// Two diagnostic paths serve the link self-test: POST /selftest/sink discards
// its body and POST /selftest/echo returns it.

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>

#include "httplib.h"
#include "obench/codec.hpp"
#include "obench/error.hpp"
#include "obench/metrics.hpp"
#include "obench/socket.hpp"
#include "obench/workloads.hpp"

namespace obench {

inline constexpr const char* kHeaderSrvDecode = "X-Srv-Decode-Us";
inline constexpr const char* kHeaderSrvExec = "X-Srv-Exec-Us";
inline constexpr const char* kHeaderSrvEncode = "X-Srv-Encode-Us";

using OpHandler = std::function<Matrix(const Matrix&)>;
using OpRegistry = std::map<OpKind, OpHandler>;

inline OpRegistry default_registry() {
  OpRegistry reg;
  for (OpKind op : kAllOps) reg[op] = [op](const Matrix& m) { return apply_op(op, m); };
  return reg;
}

inline std::string invoke_path(OpKind op) { return "/invoke/" + std::string(to_string(op)); }

namespace detail {

inline long long to_micros(std::chrono::steady_clock::duration d) {
  return std::llround(std::chrono::duration<double, std::micro>(d).count());
}

}  // namespace detail

class OffloadServer {
 public:
  // Binds immediately (StartupError on failure) and serves on a background
  // thread, one request at a time.
  explicit OffloadServer(const Endpoint& listen, OpRegistry registry = default_registry())
      : registry_(std::move(registry)) {
    server_.new_task_queue = [] { return new httplib::ThreadPool(1); };
    server_.set_read_timeout(600, 0);
    server_.set_write_timeout(600, 0);
    server_.set_keep_alive_max_count(1);
    // httplib's default enables SO_REUSEPORT, which lets a second server
    // silently share a port already in use.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
    install_routes();

    int port = listen.port;
    if (port == 0) {
      port = server_.bind_to_any_port(listen.host);
      if (port < 0) throw StartupError("cannot bind " + listen.host);
    } else if (!server_.bind_to_port(listen.host, port)) {
      throw StartupError("cannot bind " + listen.to_string());
    }
    endpoint_ = {listen.host, static_cast<std::uint16_t>(port)};
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  OffloadServer(const OffloadServer&) = delete;
  OffloadServer& operator=(const OffloadServer&) = delete;

  ~OffloadServer() { stop(); }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  // Blocks until stop() is called from another thread.
  void wait() {
    if (thread_.joinable()) thread_.join();
  }

  const Endpoint& endpoint() const { return endpoint_; }

 private:
  void install_routes() {
    server_.Post(R"(/invoke/([^/]+))", [this](const httplib::Request& req,
                                              httplib::Response& res) { invoke(req, res); });
    server_.Post("/selftest/sink", [](const httplib::Request& req, httplib::Response& res) {
      res.set_content(std::to_string(req.body.size()), "text/plain");
    });
    server_.Post("/selftest/echo", [](const httplib::Request& req, httplib::Response& res) {
      res.set_content(req.body, "application/octet-stream");
    });
  }

  static void fail(httplib::Response& res, int status, const std::string& why) {
    res.status = status;
    res.set_content(why, "text/plain");
  }

  void invoke(const httplib::Request& req, httplib::Response& res) {
    const std::string name = req.matches[1];
    const auto op = parse_op(name);
    if (!op || !registry_.contains(*op)) return fail(res, 404, "unknown function '" + name + "'");
    if (!req.has_header("Content-Length") || req.has_header("Transfer-Encoding")) {
      return fail(res, 411, "Content-Length required");
    }
    const auto codec = codec_from_content_type(req.get_header_value("Content-Type"));
    if (!codec) {
      return fail(res, 415,
                  "unsupported content type '" + req.get_header_value("Content-Type") + "'");
    }

    using Clock = std::chrono::steady_clock;
    const auto t0 = Clock::now();
    std::optional<Matrix> input;
    try {
      input = decode(*codec, req.body);
    } catch (const MalformedPayload& e) {
      return fail(res, 400, e.what());
    }
    const auto t1 = Clock::now();
    std::optional<Matrix> output;
    try {
      output = registry_.at(*op)(*input);
    } catch (const DomainError& e) {
      return fail(res, 422, e.what());
    } catch (const InvalidArgument& e) {
      return fail(res, 422, e.what());
    }
    const auto t2 = Clock::now();
    Payload body = encode(*codec, *output);
    const auto t3 = Clock::now();

    res.status = 200;
    res.set_header(kHeaderSrvDecode, std::to_string(detail::to_micros(t1 - t0)));
    res.set_header(kHeaderSrvExec, std::to_string(detail::to_micros(t2 - t1)));
    res.set_header(kHeaderSrvEncode, std::to_string(detail::to_micros(t3 - t2)));
    res.set_content(std::string(body.view()), std::string(content_type(*codec)));
  }

  OpRegistry registry_;
  httplib::Server server_;
  Endpoint endpoint_;
  std::thread thread_;
};

struct RemoteResult {
  Matrix result;
  StageTimings timings;
  std::size_t request_bytes = 0;
  std::size_t response_bytes = 0;
};

namespace detail {

inline double header_seconds(const httplib::Result& res, const char* name) {
  if (!res->has_header(name)) {
    throw MalformedPayload(std::string("response lacks header ") + name);
  }
  const std::string v = res->get_header_value(name);
  long long us = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), us);
  if (ec != std::errc{} || ptr != v.data() + v.size() || us < 0) {
    throw MalformedPayload(std::string("bad header ") + name + ": " + v);
  }
  return static_cast<double>(us) * 1e-6;
}

}  // namespace detail

// encode -> POST -> decode, timing each client stage. t_request spans from
// the start of the send to the last response byte.
inline RemoteResult invoke_remote(const Endpoint& server, OpKind op, CodecKind codec,
                                  const Matrix& m) {
  using Clock = std::chrono::steady_clock;
  RemoteResult out{Matrix(1, 1), {}, 0, 0};

  const auto t0 = Clock::now();
  const Payload request = encode(codec, m);
  const auto t1 = Clock::now();

  httplib::Client client(server.host, server.port);
  client.set_connection_timeout(10, 0);
  client.set_read_timeout(600, 0);
  client.set_write_timeout(600, 0);
  auto res = client.Post(invoke_path(op), reinterpret_cast<const char*>(request.bytes.data()),
                         request.bytes.size(), std::string(content_type(codec)));
  const auto t2 = Clock::now();

  if (!res) {
    throw OffloadUnreachable("offload to " + server.to_string() +
                             " failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) throw RemoteError(res->status, res->body);
  if (codec_from_content_type(res->get_header_value("Content-Type")) != codec) {
    throw MalformedPayload("response codec differs from request codec");
  }

  out.timings.t_srv_decode = detail::header_seconds(res, kHeaderSrvDecode);
  out.timings.t_srv_exec = detail::header_seconds(res, kHeaderSrvExec);
  out.timings.t_srv_encode = detail::header_seconds(res, kHeaderSrvEncode);

  const auto t3 = Clock::now();
  out.result = decode(codec, res->body);
  const auto t4 = Clock::now();

  out.timings.t_encode_client = std::chrono::duration<double>(t1 - t0).count();
  out.timings.t_request = std::chrono::duration<double>(t2 - t1).count();
  out.timings.t_decode_client = std::chrono::duration<double>(t4 - t3).count();
  out.request_bytes = request.bytes.size();
  out.response_bytes = res->body.size();
  return out;
}

}  // namespace obench
