#pragma once

// Full factorial sweep ops x sizes x rates x codecs x repetitions, and the
// CSV persistence of its records.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "obench/codec.hpp"
#include "obench/config.hpp"
#include "obench/error.hpp"
#include "obench/metrics.hpp"
#include "obench/netlink.hpp"
#include "obench/offload.hpp"
#include "obench/shaping_proxy.hpp"
#include "obench/workloads.hpp"

namespace obench {

inline constexpr std::string_view kCsvHeader =
    "mode,op,n,rate_bps,codec,rep,t_local_s,t_enc_cli_s,t_request_s,t_dec_cli_s,"
    "t_srv_dec_s,t_srv_exec_s,t_srv_enc_s,req_bytes,resp_bytes";

inline double model_local_seconds(const CostModel& m, OpKind op, std::size_t n) {
  return m.ops.at(op).client_seconds(n);
}

// Stage durations of one modelled offload. Communication is the closed-form
// link cost of the two payloads; the per-request overhead lands in the
// request time unattributed to any server stage.
inline StageTimings model_timings(const CostModel& m, const CodecCost& codec, OpKind op,
                                  std::size_t n, const LinkParams& link, std::uint64_t req_bytes,
                                  std::uint64_t resp_bytes) {
  StageTimings t;
  t.t_encode_client = codec.encode_seconds(n);
  t.t_decode_client = codec.decode_seconds(n);
  t.t_srv_decode = codec.decode_seconds(n) / m.server_speedup;
  t.t_srv_exec = m.ops.at(op).client_seconds(n) / m.server_speedup;
  t.t_srv_encode = codec.encode_seconds(n) / m.server_speedup;
  const double comm = transfer_time(link, req_bytes) + transfer_time(link, resp_bytes);
  t.t_request = t.server_total() + comm + m.server_overhead_s;
  return t;
}

using RecordSink = std::function<void(const ExperimentRecord&)>;

namespace detail {

struct WirePayloadSizes {
  std::uint64_t request = 0;
  std::uint64_t response = 0;
};

inline void run_model(const ExperimentConfig& cfg, const RecordSink& sink) {
  const auto codecs = cfg.effective_codecs();
  for (OpKind op : cfg.ops) {
    for (std::size_t n : cfg.sizes) {
      const Matrix input = gen_matrix(cfg.seed, n);
      const Matrix output = apply_op(op, input);
      // Byte counts come from really encoding input and result.
      std::map<CodecKind, WirePayloadSizes> sizes;
      for (const auto& label : codecs) {
        const CodecKind wire = cfg.cost_model.find_codec(label)->wire;
        if (!sizes.contains(wire)) {
          sizes[wire] = {encode(wire, input).size(), encode(wire, output).size()};
        }
      }
      const double t_local = model_local_seconds(cfg.cost_model, op, n);
      for (double mbps : cfg.rates_mbps) {
        const LinkParams link = cfg.link(mbps);
        for (const auto& label : codecs) {
          const CodecCost& cost = *cfg.cost_model.find_codec(label);
          const auto bytes = sizes.at(cost.wire);
          const StageTimings t =
              model_timings(cfg.cost_model, cost, op, n, link, bytes.request, bytes.response);
          for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
            sink({RunMode::kModel, op, n, cfg.rate_bps(mbps), label, rep, t_local, t,
                  bytes.request, bytes.response});
          }
        }
      }
    }
  }
}

inline void run_live(const ExperimentConfig& cfg, const RecordSink& sink) {
  std::unique_ptr<OffloadServer> local_server;
  Endpoint server;
  if (cfg.server) {
    server = *cfg.server;
  } else {
    local_server = std::make_unique<OffloadServer>(Endpoint{"127.0.0.1", 0});
    server = local_server->endpoint();
  }
  const auto codecs = cfg.effective_codecs();
  for (OpKind op : cfg.ops) {
    for (std::size_t n : cfg.sizes) {
      const Matrix input = gen_matrix(cfg.seed, n);
      std::vector<double> local_times;
      for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
        local_times.push_back(local_execute(op, input).seconds);
      }
      for (double mbps : cfg.rates_mbps) {
        ShapingProxy proxy(Endpoint{"127.0.0.1", 0}, server, cfg.link(mbps));
        for (const auto& label : codecs) {
          const CodecKind wire = cfg.cost_model.find_codec(label)->wire;
          for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
            const RemoteResult r = invoke_remote(proxy.endpoint(), op, wire, input);
            sink({RunMode::kLive, op, n, cfg.rate_bps(mbps), label, rep, local_times[rep],
                  r.timings, r.request_bytes, r.response_bytes});
          }
        }
      }
    }
  }
}

}  // namespace detail

// Record order: op, size, rate, codec, repetition (innermost). Live runs fail
// fast on the first transport error; there is no resume.
inline void run_experiment(const ExperimentConfig& cfg, const RecordSink& sink) {
  for (const auto& label : cfg.effective_codecs()) {
    if (!cfg.cost_model.find_codec(label)) {
      throw ConfigError("codec '" + label + "' has no cost model entry");
    }
  }
  if (cfg.mode == RunMode::kModel) {
    detail::run_model(cfg, sink);
  } else {
    detail::run_live(cfg, sink);
  }
}

inline std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg) {
  std::vector<ExperimentRecord> out;
  run_experiment(cfg, [&](const ExperimentRecord& r) { out.push_back(r); });
  return out;
}

inline std::string csv_row(const ExperimentRecord& r) {
  std::string row;
  row.reserve(256);
  row += to_string(r.mode);
  row += ',';
  row += to_string(r.op);
  row += ',' + std::to_string(r.n) + ',' + std::to_string(r.rate_bps) + ',' + r.codec + ',' +
         std::to_string(r.rep) + ',';
  for (double x : {r.t_local, r.timings.t_encode_client, r.timings.t_request,
                   r.timings.t_decode_client, r.timings.t_srv_decode, r.timings.t_srv_exec,
                   r.timings.t_srv_encode}) {
    append_number(row, x);
    row += ',';
  }
  row += std::to_string(r.req_bytes) + ',' + std::to_string(r.resp_bytes);
  return row;
}

class CsvRecordWriter {
 public:
  explicit CsvRecordWriter(std::ostream& out) : out_(out) { out_ << kCsvHeader << '\n'; }
  void operator()(const ExperimentRecord& r) { out_ << csv_row(r) << '\n'; }

 private:
  std::ostream& out_;
};

inline std::size_t run_experiment_to_csv(const ExperimentConfig& cfg,
                                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  CsvRecordWriter writer(out);
  std::size_t count = 0;
  run_experiment(cfg, [&](const ExperimentRecord& r) {
    writer(r);
    ++count;
  });
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
  return count;
}

namespace detail {

class CsvField {
 public:
  CsvField(std::size_t line, std::string_view name) : line_(line), name_(name) {}

  [[noreturn]] void fail(std::string_view value) const {
    throw SchemaError("line " + std::to_string(line_) + ": bad " + std::string(name_) +
                      " '" + std::string(value) + "'");
  }

  std::uint64_t integer(std::string_view v) const {
    std::uint64_t x = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size()) fail(v);
    return x;
  }

  double seconds(std::string_view v) const {
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(x) ||
        x < 0.0) {
      fail(v);
    }
    return x;
  }

 private:
  std::size_t line_;
  std::string_view name_;
};

}  // namespace detail

inline std::vector<ExperimentRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw SchemaError("CSV header mismatch: '" + line + "'");

  std::vector<ExperimentRecord> out;
  std::size_t line_no = 1;
  std::vector<std::string_view> f;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    f.clear();
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      f.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (f.size() != 15) {
      throw SchemaError("line " + std::to_string(line_no) + ": expected 15 fields, got " +
                        std::to_string(f.size()));
    }
    using detail::CsvField;
    ExperimentRecord r;
    if (f[0] == "live") {
      r.mode = RunMode::kLive;
    } else if (f[0] == "model") {
      r.mode = RunMode::kModel;
    } else {
      CsvField(line_no, "mode").fail(f[0]);
    }
    const auto op = parse_op(f[1]);
    if (!op) CsvField(line_no, "op").fail(f[1]);
    r.op = *op;
    r.n = CsvField(line_no, "n").integer(f[2]);
    r.rate_bps = CsvField(line_no, "rate_bps").integer(f[3]);
    if (f[4].empty()) CsvField(line_no, "codec").fail(f[4]);
    r.codec = std::string(f[4]);
    r.rep = CsvField(line_no, "rep").integer(f[5]);
    r.t_local = CsvField(line_no, "t_local_s").seconds(f[6]);
    r.timings.t_encode_client = CsvField(line_no, "t_enc_cli_s").seconds(f[7]);
    r.timings.t_request = CsvField(line_no, "t_request_s").seconds(f[8]);
    r.timings.t_decode_client = CsvField(line_no, "t_dec_cli_s").seconds(f[9]);
    r.timings.t_srv_decode = CsvField(line_no, "t_srv_dec_s").seconds(f[10]);
    r.timings.t_srv_exec = CsvField(line_no, "t_srv_exec_s").seconds(f[11]);
    r.timings.t_srv_encode = CsvField(line_no, "t_srv_enc_s").seconds(f[12]);
    r.req_bytes = CsvField(line_no, "req_bytes").integer(f[13]);
    r.resp_bytes = CsvField(line_no, "resp_bytes").integer(f[14]);
    if (r.n == 0) CsvField(line_no, "n").fail(f[2]);
    if (r.rate_bps == 0) CsvField(line_no, "rate_bps").fail(f[3]);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<ExperimentRecord> read_records_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  return read_records_csv(in);
}

}  // namespace obench
