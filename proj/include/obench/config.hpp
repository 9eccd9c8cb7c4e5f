#pragma once

// Experiment configuration and the model-mode cost table.
//
// File format: one `key = value` per line, `#` starts a comment, lists are
// comma-separated. Keys:
//
//   ops           = mul, inv, ln
//   sizes         = 400, 500, ..., 1200
//   rates_mbps    = 10, 20, 40, 60, 80, 100
//   latency_ms    = 0
//   codecs        = json, ujson, raw      (optional; default depends on mode)
//   repetitions   = 40                    (>= 2)
//   seed          = 1
//   mode          = model | live
//   server        = host:port             (live; omitted = in-process server)
//   bucket_bytes  = 65536                 (live proxy burst)
//   output        = results.csv
//   cost_model    = path                  (relative to the config file)
//   cost.<key>    = ...                   (inline cost-model keys, below)
//
// Cost model keys (a cost-model file uses them without the `cost.` prefix):
//
//   server_speedup    = 10       server runs every stage this many times faster
//   server_overhead_s = 0        per-request constant, unprobed on the server
//   op.<op>           = coeff, power          client exec = coeff * n^power
//   codec.<label>     = wire, enc_a, enc_b, dec_a, dec_b
//                        client encode = enc_a + enc_b * n^2, same for decode

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "obench/codec.hpp"
#include "obench/error.hpp"
#include "obench/metrics.hpp"
#include "obench/netlink.hpp"
#include "obench/socket.hpp"
#include "obench/workloads.hpp"

namespace obench {

struct OpCost {
  double coeff = 0.0;
  double power = 3.0;

  double client_seconds(std::size_t n) const {
    return coeff * std::pow(static_cast<double>(n), power);
  }
  friend bool operator==(const OpCost&, const OpCost&) = default;
};

struct CodecCost {
  CodecKind wire = CodecKind::kText;
  double encode_a = 0.0;
  double encode_b = 0.0;
  double decode_a = 0.0;
  double decode_b = 0.0;

  double encode_seconds(std::size_t n) const {
    const double nn = static_cast<double>(n);
    return encode_a + encode_b * nn * nn;
  }
  double decode_seconds(std::size_t n) const {
    const double nn = static_cast<double>(n);
    return decode_a + decode_b * nn * nn;
  }
  friend bool operator==(const CodecCost&, const CodecCost&) = default;
};

struct CostModel {
  double server_speedup = 1.0;
  double server_overhead_s = 0.0;
  std::map<OpKind, OpCost> ops;
  // Insertion order is the default codec order of a model run.
  std::vector<std::pair<std::string, CodecCost>> codecs;

  const CodecCost* find_codec(std::string_view label) const {
    for (const auto& [name, cost] : codecs) {
      if (name == label) return &cost;
    }
    return nullptr;
  }

  void set_codec(const std::string& label, const CodecCost& cost) {
    for (auto& [name, c] : codecs) {
      if (name == label) {
        c = cost;
        return;
      }
    }
    codecs.emplace_back(label, cost);
  }

  // Default calibration (see tools/calibrate_model.cpp and
  // configs/default_cost_model.conf): "json" and "ujson" are a slow and a
  // fast TEXT implementation, "raw" the binary codec.
  static CostModel defaults() {
    CostModel m;
    m.server_speedup = 5.0;
    m.server_overhead_s = 0.0;
    m.ops[OpKind::kMul] = {1.4e-8, 3.0};
    m.ops[OpKind::kInv] = {2.5e-10, 3.0};
    m.ops[OpKind::kLn] = {5e-8, 2.0};
    m.codecs = {
        {"json", {CodecKind::kText, 0.2, 1e-6, 0.2, 1.5e-6}},
        {"ujson", {CodecKind::kText, 0.2, 2e-7, 0.2, 3e-7}},
        {"raw", {CodecKind::kRaw, 0.2, 5e-9, 0.2, 5e-9}},
    };
    return m;
  }

  friend bool operator==(const CostModel&, const CostModel&) = default;
};

struct ExperimentConfig {
  std::vector<OpKind> ops = {OpKind::kMul, OpKind::kInv, OpKind::kLn};
  std::vector<std::size_t> sizes = {400, 500, 600, 700, 800, 900, 1000, 1100, 1200};
  std::vector<double> rates_mbps = {10, 20, 40, 60, 80, 100};
  double latency_ms = 0.0;
  std::vector<std::string> codecs;  // empty: mode default
  std::size_t repetitions = 40;
  std::uint64_t seed = 1;
  RunMode mode = RunMode::kModel;
  std::optional<Endpoint> server;
  std::size_t bucket_bytes = kDefaultBucketBytes;
  std::string output;
  CostModel cost_model = CostModel::defaults();

  // Live runs compare the two real wire formats; model runs every labelled
  // cost entry.
  std::vector<std::string> effective_codecs() const {
    if (!codecs.empty()) return codecs;
    if (mode == RunMode::kLive) return {"json", "raw"};
    std::vector<std::string> out;
    for (const auto& [name, cost] : cost_model.codecs) out.push_back(name);
    return out;
  }

  std::uint64_t rate_bps(double mbps) const {
    return static_cast<std::uint64_t>(std::llround(mbps * 1e6));
  }

  LinkParams link(double mbps) const {
    return {static_cast<double>(rate_bps(mbps)), latency_ms * 1e-3, bucket_bytes};
  }

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

class LineContext {
 public:
  LineContext(std::string source, std::size_t line, std::string key)
      : source_(std::move(source)), line_(line), key_(std::move(key)) {}

  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError(source_ + ":" + std::to_string(line_) + ": " + key_ + ": " + why);
  }

  double number(std::string_view v) const {
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(x)) {
      fail("not a number: '" + std::string(v) + "'");
    }
    return x;
  }

  std::uint64_t integer(std::string_view v) const {
    std::uint64_t x = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size()) {
      fail("not a non-negative integer: '" + std::string(v) + "'");
    }
    return x;
  }

  double non_negative(std::string_view v) const {
    const double x = number(v);
    if (x < 0.0) fail("must be >= 0");
    return x;
  }

 private:
  std::string source_;
  std::size_t line_;
  std::string key_;
};

struct KeyValue {
  std::size_t line;
  std::string key;
  std::string value;
};

inline std::vector<KeyValue> parse_lines(std::string_view text, const std::string& source) {
  std::vector<KeyValue> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    out.push_back({line_no, std::string(trim(line.substr(0, eq))),
                   std::string(trim(line.substr(eq + 1)))});
  }
  return out;
}

inline bool valid_label(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

// Applies one cost-model key; false if the key is not a cost-model key.
inline bool apply_cost_key(CostModel& m, std::string_view key, std::string_view value,
                           const LineContext& ctx) {
  if (key == "server_speedup") {
    m.server_speedup = ctx.number(value);
    if (!(m.server_speedup > 0.0)) ctx.fail("must be > 0");
    return true;
  }
  if (key == "server_overhead_s") {
    m.server_overhead_s = ctx.non_negative(value);
    return true;
  }
  if (key.starts_with("op.")) {
    const auto op = parse_op(key.substr(3));
    if (!op) ctx.fail("unknown op");
    const auto parts = split_list(value);
    if (parts.size() != 2) ctx.fail("expected 'coeff, power'");
    m.ops[*op] = {ctx.non_negative(parts[0]), ctx.non_negative(parts[1])};
    return true;
  }
  if (key.starts_with("codec.")) {
    const std::string label(key.substr(6));
    if (!valid_label(label)) ctx.fail("codec labels use [a-z0-9_-]");
    const auto parts = split_list(value);
    if (parts.size() != 5) ctx.fail("expected 'wire, enc_a, enc_b, dec_a, dec_b'");
    const auto wire = parse_codec_kind(parts[0]);
    if (!wire) ctx.fail("wire codec must be 'text' or 'raw'");
    m.set_codec(label, {*wire, ctx.non_negative(parts[1]), ctx.non_negative(parts[2]),
                        ctx.non_negative(parts[3]), ctx.non_negative(parts[4])});
    return true;
  }
  return false;
}

inline std::string read_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(std::string("cannot read ") + what + " '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

inline CostModel parse_cost_model(std::string_view text, const std::string& source = "<cost>") {
  CostModel m;
  for (const auto& kv : detail::parse_lines(text, source)) {
    detail::LineContext ctx(source, kv.line, kv.key);
    if (!detail::apply_cost_key(m, kv.key, kv.value, ctx)) ctx.fail("unknown key");
  }
  return m;
}

inline CostModel load_cost_model(const std::filesystem::path& path) {
  return parse_cost_model(detail::read_file(path, "cost model"), path.string());
}

// `base_dir` resolves a relative cost_model path.
inline ExperimentConfig parse_config(std::string_view text, const std::string& source = "<config>",
                                     const std::filesystem::path& base_dir = ".") {
  ExperimentConfig cfg;
  const auto lines = detail::parse_lines(text, source);

  // A cost_model file is the base; inline cost.* keys override it.
  for (const auto& kv : lines) {
    if (kv.key != "cost_model") continue;
    std::filesystem::path p = kv.value;
    if (p.is_relative()) p = base_dir / p;
    try {
      cfg.cost_model = load_cost_model(p);
    } catch (const ConfigError& e) {
      detail::LineContext(source, kv.line, kv.key).fail(e.what());
    }
  }

  std::optional<detail::LineContext> codecs_ctx;
  for (const auto& kv : lines) {
    detail::LineContext ctx(source, kv.line, kv.key);
    const std::string_view key = kv.key;
    const std::string_view value = kv.value;
    if (key == "cost_model") continue;
    if (key.starts_with("cost.")) {
      if (!detail::apply_cost_key(cfg.cost_model, key.substr(5), value, ctx)) ctx.fail("unknown key");
    } else if (key == "ops") {
      cfg.ops.clear();
      for (auto item : detail::split_list(value)) {
        const auto op = parse_op(item);
        if (!op) ctx.fail("unknown op '" + std::string(item) + "'");
        cfg.ops.push_back(*op);
      }
      if (cfg.ops.empty()) ctx.fail("must not be empty");
    } else if (key == "sizes") {
      cfg.sizes.clear();
      for (auto item : detail::split_list(value)) {
        const auto n = ctx.integer(item);
        if (n == 0) ctx.fail("sizes must be >= 1");
        cfg.sizes.push_back(static_cast<std::size_t>(n));
      }
      if (cfg.sizes.empty()) ctx.fail("must not be empty");
    } else if (key == "rates_mbps") {
      cfg.rates_mbps.clear();
      for (auto item : detail::split_list(value)) {
        const double r = ctx.number(item);
        if (!(r > 0.0)) ctx.fail("rates must be > 0");
        cfg.rates_mbps.push_back(r);
      }
      if (cfg.rates_mbps.empty()) ctx.fail("must not be empty");
    } else if (key == "latency_ms") {
      cfg.latency_ms = ctx.non_negative(value);
    } else if (key == "codecs") {
      cfg.codecs.clear();
      for (auto item : detail::split_list(value)) {
        if (!detail::valid_label(item)) ctx.fail("bad codec label '" + std::string(item) + "'");
        cfg.codecs.emplace_back(item);
      }
      codecs_ctx = ctx;
    } else if (key == "repetitions") {
      cfg.repetitions = static_cast<std::size_t>(ctx.integer(value));
      if (cfg.repetitions < 2) ctx.fail("must be >= 2");
    } else if (key == "seed") {
      cfg.seed = ctx.integer(value);
    } else if (key == "mode") {
      if (value == "model") {
        cfg.mode = RunMode::kModel;
      } else if (value == "live") {
        cfg.mode = RunMode::kLive;
      } else {
        ctx.fail("expected 'live' or 'model'");
      }
    } else if (key == "server") {
      try {
        cfg.server = value.empty() ? std::nullopt : std::optional(Endpoint::parse(value));
      } catch (const InvalidArgument& e) {
        ctx.fail(e.what());
      }
    } else if (key == "bucket_bytes") {
      cfg.bucket_bytes = static_cast<std::size_t>(ctx.integer(value));
      if (cfg.bucket_bytes < kPacingChunkBytes) {
        ctx.fail("must be >= " + std::to_string(kPacingChunkBytes));
      }
    } else if (key == "output") {
      cfg.output = std::string(value);
    } else {
      ctx.fail("unknown key");
    }
  }

  for (const auto& label : cfg.codecs) {
    if (!cfg.cost_model.find_codec(label)) {
      const std::string why = "codec '" + label + "' has no cost model entry";
      if (codecs_ctx) codecs_ctx->fail(why);
      throw ConfigError(source + ": " + why);
    }
  }
  for (OpKind op : cfg.ops) {
    if (!cfg.cost_model.ops.contains(op)) {
      throw ConfigError(source + ": op '" + std::string(to_string(op)) +
                        "' has no cost model entry");
    }
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(detail::read_file(path, "config"), path.string(),
                      path.has_parent_path() ? path.parent_path() : ".");
}

namespace detail {

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& render) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += render(items[i]);
  }
  return out;
}

inline std::string dump_cost_lines(const CostModel& m, std::string_view prefix) {
  std::string out;
  const std::string p(prefix);
  out += p + "server_speedup = " + format_number(m.server_speedup) + "\n";
  out += p + "server_overhead_s = " + format_number(m.server_overhead_s) + "\n";
  for (const auto& [op, cost] : m.ops) {
    out += p + "op." + std::string(to_string(op)) + " = " + format_number(cost.coeff) + ", " +
           format_number(cost.power) + "\n";
  }
  for (const auto& [label, c] : m.codecs) {
    out += p + "codec." + label + " = " + std::string(to_string(c.wire)) + ", " +
           format_number(c.encode_a) + ", " + format_number(c.encode_b) + ", " +
           format_number(c.decode_a) + ", " + format_number(c.decode_b) + "\n";
  }
  return out;
}

}  // namespace detail

inline std::string dump_cost_model(const CostModel& m) { return detail::dump_cost_lines(m, ""); }

// Every field, inline cost keys included; parse_config(dump_config(c)) == c.
inline std::string dump_config(const ExperimentConfig& cfg) {
  using detail::join;
  std::string out;
  out += "ops = " + join(cfg.ops, [](OpKind op) { return std::string(to_string(op)); }) + "\n";
  out += "sizes = " + join(cfg.sizes, [](std::size_t n) { return std::to_string(n); }) + "\n";
  out += "rates_mbps = " + join(cfg.rates_mbps, [](double r) { return format_number(r); }) + "\n";
  out += "latency_ms = " + format_number(cfg.latency_ms) + "\n";
  if (!cfg.codecs.empty()) {
    out += "codecs = " + join(cfg.codecs, [](const std::string& s) { return s; }) + "\n";
  }
  out += "repetitions = " + std::to_string(cfg.repetitions) + "\n";
  out += "seed = " + std::to_string(cfg.seed) + "\n";
  out += "mode = " + std::string(to_string(cfg.mode)) + "\n";
  if (cfg.server) out += "server = " + cfg.server->to_string() + "\n";
  out += "bucket_bytes = " + std::to_string(cfg.bucket_bytes) + "\n";
  if (!cfg.output.empty()) out += "output = " + cfg.output + "\n";
  out += detail::dump_cost_lines(cfg.cost_model, "cost.");
  return out;
}

}  // namespace obench
