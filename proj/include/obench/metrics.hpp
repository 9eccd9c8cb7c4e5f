#pragma once

// Completion-time decomposition of one offloaded call and the offloading
// decision measures derived from it.
//
// Client view:  encode | request (POST until last response byte) | decode
// Server view inside the request: decode | exec | encode
// Communication time is never measured directly; it is what remains of the
// request time after the server stages.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "obench/error.hpp"
#include "obench/stats.hpp"
#include "obench/workloads.hpp"

namespace obench {

struct StageTimings {
  double t_encode_client = 0.0;
  double t_request = 0.0;
  double t_decode_client = 0.0;
  double t_srv_decode = 0.0;
  double t_srv_exec = 0.0;
  double t_srv_encode = 0.0;

  double server_total() const { return t_srv_decode + t_srv_exec + t_srv_encode; }

  friend bool operator==(const StageTimings&, const StageTimings&) = default;
};

struct InferredComm {
  double seconds;
  bool clamped;  // request time was shorter than the server stages
};

inline InferredComm infer_comm_time(const StageTimings& t) {
  const double raw = t.t_request - t.server_total();
  if (raw < 0.0) return {0.0, true};
  return {raw, false};
}

inline double comm_time(const StageTimings& t) { return infer_comm_time(t).seconds; }

inline double remote_completion(const StageTimings& t) {
  return t.t_encode_client + t.t_request + t.t_decode_client;
}

// Share of the remote completion spent moving data: both codec passes on
// both hosts plus communication.
inline double marshalling_ratio(const StageTimings& t) {
  const double total = remote_completion(t);
  if (!(total > 0.0)) throw UndefinedRatio("marshalling ratio of a zero completion time");
  return (t.t_encode_client + t.t_decode_client + t.t_srv_decode + t.t_srv_encode +
          comm_time(t)) /
         total;
}

inline double exec_share(const StageTimings& t) {
  const double total = remote_completion(t);
  if (!(total > 0.0)) throw UndefinedRatio("exec share of a zero completion time");
  return t.t_srv_exec / total;
}

// 1 when offloading strictly beats local execution; ties stay local.
inline int decide(double t_local, double t_remote) { return t_remote < t_local ? 1 : 0; }

inline double alt_to_baseline_ratio(double t_alt, double t_baseline) {
  if (!(t_baseline > 0.0)) throw UndefinedRatio("baseline completion time must be positive");
  return t_alt / t_baseline;
}

// Time lost by offloading when local execution was faster: max(0, remote - local).
inline double wrong_decision_penalty(double t_local, double t_remote) {
  return std::max(0.0, t_remote - t_local);
}

enum class RunMode : std::uint8_t { kLive, kModel };

inline std::string_view to_string(RunMode m) { return m == RunMode::kLive ? "live" : "model"; }

struct ExperimentRecord {
  RunMode mode = RunMode::kModel;
  OpKind op = OpKind::kMul;
  std::size_t n = 0;
  std::uint64_t rate_bps = 0;
  std::string codec;
  std::size_t rep = 0;
  double t_local = 0.0;
  StageTimings timings;
  std::uint64_t req_bytes = 0;
  std::uint64_t resp_bytes = 0;

  friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

struct DecisionVector {
  std::vector<std::uint64_t> rates_bps;
  std::vector<int> bits;

  int count() const {
    int s = 0;
    for (int b : bits) s += b;
    return s;
  }
};

struct PenaltyVector {
  std::vector<std::string> codecs;
  std::vector<double> seconds;

  double at(std::string_view codec) const {
    for (std::size_t i = 0; i < codecs.size(); ++i) {
      if (codecs[i] == codec) return seconds[i];
    }
    throw InvalidArgument("penalty vector has no codec '" + std::string(codec) + "'");
  }
};

// Mean local and mean remote completion over the records of one grid cell.
struct CellMeans {
  double t_local;
  double t_remote;
};

inline std::string describe_cell(const ExperimentRecord& like, std::uint64_t rate_bps,
                                 std::string_view codec) {
  return "op=" + std::string(to_string(like.op)) + " n=" + std::to_string(like.n) +
         " rate_bps=" + std::to_string(rate_bps) + " codec=" + std::string(codec);
}

inline CellMeans cell_means(std::span<const ExperimentRecord> records, std::uint64_t rate_bps,
                            std::string_view codec) {
  double local = 0.0;
  double remote = 0.0;
  std::size_t count = 0;
  for (const auto& r : records) {
    if (r.rate_bps != rate_bps || r.codec != codec) continue;
    local += r.t_local;
    remote += remote_completion(r.timings);
    ++count;
  }
  if (count == 0) {
    throw IncompleteGrid("missing cell " +
                         (records.empty() ? std::string("(no records)")
                                          : describe_cell(records.front(), rate_bps, codec)));
  }
  return {local / static_cast<double>(count), remote / static_cast<double>(count)};
}

namespace detail {

inline void require_single_group(std::span<const ExperimentRecord> records, bool same_codec) {
  if (records.empty()) throw IncompleteGrid("no records for decision grid");
  const auto& first = records.front();
  for (const auto& r : records) {
    if (r.op != first.op || r.n != first.n || (same_codec && r.codec != first.codec)) {
      throw InvalidArgument("records span more than one (op, n" +
                            std::string(same_codec ? ", codec" : "") + ") group");
    }
  }
}

}  // namespace detail

// Records of one (op, n, codec); one bit per rate in the given order.
inline DecisionVector decision_vector(std::span<const ExperimentRecord> records,
                                      std::span<const std::uint64_t> rates_bps) {
  detail::require_single_group(records, true);
  DecisionVector dv;
  for (std::uint64_t rate : rates_bps) {
    const CellMeans m = cell_means(records, rate, records.front().codec);
    dv.rates_bps.push_back(rate);
    dv.bits.push_back(decide(m.t_local, m.t_remote));
  }
  return dv;
}

// Records of one (op, n); per codec label the penalty summed over all rates.
inline PenaltyVector cumulative_penalty_vector(std::span<const ExperimentRecord> records,
                                               std::span<const std::uint64_t> rates_bps,
                                               std::span<const std::string> codecs) {
  detail::require_single_group(records, false);
  PenaltyVector pv;
  for (const auto& codec : codecs) {
    double sum = 0.0;
    for (std::uint64_t rate : rates_bps) {
      const CellMeans m = cell_means(records, rate, codec);
      sum += wrong_decision_penalty(m.t_local, m.t_remote);
    }
    pv.codecs.push_back(codec);
    pv.seconds.push_back(sum);
  }
  return pv;
}

}  // namespace obench
