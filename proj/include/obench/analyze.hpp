#pragma once

// Aggregates experiment records into per-(op, n) reports: stage means with
// 95% confidence intervals, marshalling ratios, decision vectors, ratios
// against the baseline codec and cumulative penalty vectors.

#include <fmt/format.h>

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "obench/codec.hpp"
#include "obench/error.hpp"
#include "obench/metrics.hpp"
#include "obench/stats.hpp"

namespace obench {

struct CellReport {
  std::uint64_t rate_bps = 0;
  std::string codec;
  std::size_t samples = 0;
  MeanCi local{};
  MeanCi remote{};
  MeanCi enc_cli{};
  MeanCi request{};
  MeanCi dec_cli{};
  MeanCi srv_dec{};
  MeanCi srv_exec{};
  MeanCi srv_enc{};
  MeanCi comm{};
  double marshalling_ratio = 0.0;  // of the mean stage timings
  double alt_to_baseline = 0.0;    // mean remote / baseline codec mean remote
  int decision = 0;
  double penalty = 0.0;
  bool border = false;  // mean local lies inside the remote CI
  std::size_t clamped = 0;
};

struct GroupReport {
  OpKind op = OpKind::kMul;
  std::size_t n = 0;
  std::vector<CellReport> cells;  // rate-major, codec-minor
  std::vector<DecisionVector> decisions;  // one per codec
  PenaltyVector penalties;

  const CellReport& cell(std::uint64_t rate_bps, std::string_view codec) const {
    for (const auto& c : cells) {
      if (c.rate_bps == rate_bps && c.codec == codec) return c;
    }
    throw IncompleteGrid("no cell for rate " + std::to_string(rate_bps));
  }

  const DecisionVector& decision(std::string_view codec) const {
    for (std::size_t i = 0; i < penalties.codecs.size(); ++i) {
      if (penalties.codecs[i] == codec) return decisions[i];
    }
    throw InvalidArgument("no decision vector for codec '" + std::string(codec) + "'");
  }
};

struct Report {
  std::size_t records = 0;
  std::vector<std::uint64_t> rates_bps;  // ascending
  std::vector<std::string> codecs;       // first appearance; the first is the baseline
  std::vector<GroupReport> groups;       // op, then n ascending

  const GroupReport& group(OpKind op, std::size_t n) const {
    for (const auto& g : groups) {
      if (g.op == op && g.n == n) return g;
    }
    throw InvalidArgument("no group op=" + std::string(to_string(op)) + " n=" + std::to_string(n));
  }
};

namespace detail {

template <typename F>
MeanCi stat_of(std::span<const ExperimentRecord* const> rs, F&& get) {
  std::vector<double> v;
  v.reserve(rs.size());
  for (const auto* r : rs) v.push_back(get(*r));
  return mean_ci95(v);
}

}  // namespace detail

inline Report analyze(std::span<const ExperimentRecord> records) {
  Report report;
  report.records = records.size();
  if (records.empty()) throw SchemaError("no records to analyze");

  std::map<std::tuple<OpKind, std::size_t, std::uint64_t, std::string>,
           std::vector<const ExperimentRecord*>>
      cells;
  std::map<std::pair<OpKind, std::size_t>, std::vector<ExperimentRecord>> groups;
  for (const auto& r : records) {
    if (std::find(report.rates_bps.begin(), report.rates_bps.end(), r.rate_bps) ==
        report.rates_bps.end()) {
      report.rates_bps.push_back(r.rate_bps);
    }
    if (std::find(report.codecs.begin(), report.codecs.end(), r.codec) == report.codecs.end()) {
      report.codecs.push_back(r.codec);
    }
    cells[{r.op, r.n, r.rate_bps, r.codec}].push_back(&r);
    groups[{r.op, r.n}].push_back(r);
  }
  std::sort(report.rates_bps.begin(), report.rates_bps.end());

  for (const auto& [key, group_records] : groups) {
    const auto [op, n] = key;
    GroupReport g;
    g.op = op;
    g.n = n;
    for (std::uint64_t rate : report.rates_bps) {
      for (const auto& codec : report.codecs) {
        auto it = cells.find({op, n, rate, codec});
        if (it == cells.end()) {
          throw IncompleteGrid("missing cell " + describe_cell(group_records.front(), rate, codec));
        }
        const auto& rs = it->second;
        if (rs.size() < 2) {
          throw InsufficientData("cell " + describe_cell(group_records.front(), rate, codec) +
                                 " has fewer than 2 repetitions");
        }
        CellReport c;
        c.rate_bps = rate;
        c.codec = codec;
        c.samples = rs.size();
        using R = ExperimentRecord;
        c.local = detail::stat_of(rs, [](const R& r) { return r.t_local; });
        c.remote = detail::stat_of(rs, [](const R& r) { return remote_completion(r.timings); });
        c.enc_cli = detail::stat_of(rs, [](const R& r) { return r.timings.t_encode_client; });
        c.request = detail::stat_of(rs, [](const R& r) { return r.timings.t_request; });
        c.dec_cli = detail::stat_of(rs, [](const R& r) { return r.timings.t_decode_client; });
        c.srv_dec = detail::stat_of(rs, [](const R& r) { return r.timings.t_srv_decode; });
        c.srv_exec = detail::stat_of(rs, [](const R& r) { return r.timings.t_srv_exec; });
        c.srv_enc = detail::stat_of(rs, [](const R& r) { return r.timings.t_srv_encode; });
        c.comm = detail::stat_of(rs, [](const R& r) { return comm_time(r.timings); });
        for (const auto* r : rs) c.clamped += infer_comm_time(r->timings).clamped ? 1 : 0;

        const StageTimings mean_t{c.enc_cli.mean, c.request.mean, c.dec_cli.mean,
                                  c.srv_dec.mean, c.srv_exec.mean, c.srv_enc.mean};
        c.marshalling_ratio = marshalling_ratio(mean_t);
        c.decision = decide(c.local.mean, c.remote.mean);
        c.penalty = wrong_decision_penalty(c.local.mean, c.remote.mean);
        c.border = std::abs(c.local.mean - c.remote.mean) <= c.remote.half_width;
        g.cells.push_back(std::move(c));
      }
      const double baseline = g.cells[g.cells.size() - report.codecs.size()].remote.mean;
      for (std::size_t i = g.cells.size() - report.codecs.size(); i < g.cells.size(); ++i) {
        g.cells[i].alt_to_baseline = alt_to_baseline_ratio(g.cells[i].remote.mean, baseline);
      }
    }
    for (const auto& codec : report.codecs) {
      std::vector<ExperimentRecord> subset;
      for (const auto& r : group_records) {
        if (r.codec == codec) subset.push_back(r);
      }
      g.decisions.push_back(decision_vector(subset, report.rates_bps));
    }
    g.penalties = cumulative_penalty_vector(group_records, report.rates_bps, report.codecs);
    report.groups.push_back(std::move(g));
  }
  return report;
}

inline std::string format_mbps(std::uint64_t rate_bps) {
  return format_number(static_cast<double>(rate_bps) / 1e6);
}

inline std::string render_text(const Report& report) {
  std::string out;
  auto rates = [&] {
    std::string s;
    for (std::size_t i = 0; i < report.rates_bps.size(); ++i) {
      s += (i ? "," : "") + format_mbps(report.rates_bps[i]);
    }
    return s;
  }();
  std::string codec_list;
  for (std::size_t i = 0; i < report.codecs.size(); ++i) {
    codec_list += (i ? "," : "") + report.codecs[i];
  }
  out += fmt::format("offload benchmark report\nrecords: {}  rates_mbps: {}  codecs: {}  baseline: {}\n",
                     report.records, rates, codec_list, report.codecs.front());

  for (const auto& g : report.groups) {
    out += fmt::format("\n== op={} n={} ==\n", to_string(g.op), g.n);
    out += fmt::format("{:>9} {:<8} {:>21} {:>21} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} "
                       "{:>7} {:>7} {:>3} {:>10} {}\n",
                       "rate_mbps", "codec", "local_s", "remote_s", "enc_cli", "request",
                       "dec_cli", "srv_dec", "srv_exec", "srv_enc", "comm", "marsh", "alt/base",
                       "off", "penalty_s", "flags");
    for (const auto& c : g.cells) {
      std::string flags;
      if (c.border) flags += "border ";
      if (c.clamped) flags += fmt::format("clamped={} ", c.clamped);
      if (!flags.empty()) flags.pop_back();
      std::string line = fmt::format(
          "{:>9} {:<8} {:>10.6f}±{:<10.6f} {:>10.6f}±{:<10.6f} {:>10.6f} {:>10.6f} {:>10.6f} "
          "{:>10.6f} {:>10.6f} {:>10.6f} {:>10.6f} {:>7.4f} {:>7.4f} {:>3} {:>10.6f} {}",
          format_mbps(c.rate_bps), c.codec, c.local.mean, c.local.half_width, c.remote.mean,
          c.remote.half_width, c.enc_cli.mean, c.request.mean, c.dec_cli.mean, c.srv_dec.mean,
          c.srv_exec.mean, c.srv_enc.mean, c.comm.mean, c.marshalling_ratio, c.alt_to_baseline,
          c.decision, c.penalty, flags);
      while (line.ends_with(' ')) line.pop_back();
      out += line + '\n';
    }
    out += fmt::format("decision vectors (rates_mbps {}):\n", rates);
    for (std::size_t i = 0; i < report.codecs.size(); ++i) {
      std::string bits;
      for (std::size_t b = 0; b < g.decisions[i].bits.size(); ++b) {
        bits += (b ? "," : "") + std::to_string(g.decisions[i].bits[b]);
      }
      out += fmt::format("  {:<8} [{}] sum={}\n", report.codecs[i], bits, g.decisions[i].count());
    }
    std::string pen;
    for (std::size_t i = 0; i < g.penalties.seconds.size(); ++i) {
      pen += (i ? ", " : "") + fmt::format("{:.6f}", g.penalties.seconds[i]);
    }
    out += fmt::format("cumulative penalty [{}] = [{}]\n", codec_list, pen);
  }
  return out;
}

inline constexpr std::string_view kSummaryHeader =
    "op,n,rate_bps,codec,samples,t_local_mean,t_local_ci,t_remote_mean,t_remote_ci,"
    "t_enc_cli_mean,t_request_mean,t_dec_cli_mean,t_srv_dec_mean,t_srv_exec_mean,"
    "t_srv_enc_mean,t_comm_mean,t_comm_ci,marshalling_ratio,alt_to_baseline,decision,penalty_s,"
    "border,clamped,decision_sum,cumulative_penalty_s";

// One row per grid cell; numbers in shortest round-trip form for plotting.
inline std::string render_summary_csv(const Report& report) {
  std::string out(kSummaryHeader);
  out += '\n';
  for (const auto& g : report.groups) {
    for (const auto& c : g.cells) {
      std::size_t ci = 0;
      while (report.codecs[ci] != c.codec) ++ci;
      out += fmt::format("{},{},{},{},{}", to_string(g.op), g.n, c.rate_bps, c.codec, c.samples);
      for (double x : {c.local.mean, c.local.half_width, c.remote.mean, c.remote.half_width,
                       c.enc_cli.mean, c.request.mean, c.dec_cli.mean, c.srv_dec.mean,
                       c.srv_exec.mean, c.srv_enc.mean, c.comm.mean, c.comm.half_width,
                       c.marshalling_ratio, c.alt_to_baseline}) {
        out += ',';
        append_number(out, x);
      }
      out += fmt::format(",{},", c.decision);
      append_number(out, c.penalty);
      out += fmt::format(",{},{},{},", c.border ? 1 : 0, c.clamped, g.decisions[ci].count());
      append_number(out, g.penalties.seconds[ci]);
      out += '\n';
    }
  }
  return out;
}

}  // namespace obench
