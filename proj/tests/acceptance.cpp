// Acceptance suite: one PASS/FAIL line per criterion.
//
//   obench_acceptance        run all ten
//   obench_acceptance 4 7    run only the listed criteria
//
// Exit status is nonzero when any selected criterion fails.

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "obench/obench.hpp"
#include "oracles.hpp"

using namespace obench;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail = what;
      pass = false;
    }
  }
};

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// 1. decode(encode(m)) is bit-identical for 1000 seeded matrices per codec.
Outcome codec_roundtrip() {
  Outcome o;
  const auto t0 = Clock::now();
  std::vector<Matrix> ms;
  // Special values first: signed zeros, subnormals, extremes.
  ms.emplace_back(2, 4, std::vector<double>{-0.0, 0.0, 5e-324, -5e-324, 2.2250738585072009e-308,
                                            2.2250738585072014e-308,
                                            std::numeric_limits<double>::max(),
                                            -std::numeric_limits<double>::max()});
  ms.emplace_back(1, 1, std::vector<double>{-0.0});
  for (std::uint64_t seed = 0; ms.size() < 1000; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> dim(1, 24);
    Matrix m(dim(rng), dim(rng));
    for (double& x : m.data()) {
      do {
        x = std::bit_cast<double>(rng());
      } while (!std::isfinite(x));
    }
    ms.push_back(std::move(m));
  }
  for (CodecKind k : {CodecKind::kText, CodecKind::kRaw}) {
    std::size_t ok = 0;
    for (const auto& m : ms) ok += bit_equal(decode(k, encode(k, m).bytes), m);
    o.check(ok == ms.size(), fmt::format("{}: {}/{} bit-identical", to_string(k), ok, ms.size()));
  }
  const double s = since(t0);
  o.check(s < 30.0, fmt::format("took {:.1f} s", s));
  if (o.pass) o.detail = fmt::format("1000 matrices x 2 codecs bit-identical in {:.2f} s", s);
  return o;
}

// 2. RAW length is 12 + 8*rows*cols; the 1x1 golden fixture matches.
Outcome raw_framing() {
  Outcome o;
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> dim(1, 300);
  for (int i = 0; i < 50; ++i) {
    const std::size_t r = dim(rng), c = dim(rng);
    const Payload p = encode_raw(Matrix(r, c));
    o.check(p.size() == 12 + 8 * r * c, fmt::format("{}x{} encoded to {} bytes", r, c, p.size()));
  }
  const auto golden = oracle::read_bytes(oracle::fixture("raw_1x1.bin"));
  o.check(golden.size() == 20, "golden fixture missing or wrong size");
  o.check(encode_raw(Matrix(1, 1, {1.0})).bytes == golden, "1x1 [[1.0]] differs from golden bytes");
  if (o.pass) o.detail = "50 shapes exact, 1x1 golden bytes match";
  return o;
}

// 3. transfer_time against an extended-precision closed form, plus monotonicity.
Outcome link_model() {
  Outcome o;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> mbps(0.1, 1000.0);
  std::uniform_real_distribution<double> ms(0.0, 100.0);
  std::uniform_int_distribution<std::uint64_t> bytes(0, 1'000'000'000);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const LinkParams l = LinkParams::from_mbps(mbps(rng), ms(rng));
    const std::uint64_t n = bytes(rng);
    const long double want = static_cast<long double>(l.latency_s) +
                             8.0L * static_cast<long double>(n) / static_cast<long double>(l.rate_bps);
    const double got = transfer_time(l, n);
    if (want > 0) worst = std::max(worst, static_cast<double>(std::abs(got - want) / want));

    LinkParams faster = l;
    faster.rate_bps *= 1.5;
    LinkParams later = l;
    later.latency_s += 0.001;
    o.check(transfer_time(l, n + 1) > got, "not increasing in bytes");
    o.check(transfer_time(faster, n) <= got, "not non-increasing in rate");
    o.check(transfer_time(later, n) > got, "not increasing in latency");
  }
  o.check(worst <= 1e-12, fmt::format("max relative error {:.3g}", worst));
  if (o.pass) o.detail = fmt::format("1000 points, max relative error {:.2g}", worst);
  return o;
}

// 4. serve + proxy on loopback: results bit-equal to local, 10 Mbps slower than 100.
Outcome live_smoke() {
  Outcome o;
  const auto t0 = Clock::now();
  OffloadServer server({"127.0.0.1", 0});
  ShapingProxy slow({"127.0.0.1", 0}, server.endpoint(), LinkParams::from_mbps(10));
  ShapingProxy fast({"127.0.0.1", 0}, server.endpoint(), LinkParams::from_mbps(100));
  const Matrix a = gen_matrix(1, 100);
  const Matrix local = local_execute(OpKind::kMul, a).result;
  std::string detail;
  for (CodecKind k : {CodecKind::kText, CodecKind::kRaw}) {
    std::vector<double> t10, t100;
    for (int i = 0; i < 5; ++i) {
      const RemoteResult r10 = invoke_remote(slow.endpoint(), OpKind::kMul, k, a);
      const RemoteResult r100 = invoke_remote(fast.endpoint(), OpKind::kMul, k, a);
      o.check(bit_equal(r10.result, local) && bit_equal(r100.result, local),
              fmt::format("{} result differs from local_execute", to_string(k)));
      t10.push_back(r10.timings.t_request);
      t100.push_back(r100.timings.t_request);
    }
    std::sort(t10.begin(), t10.end());
    std::sort(t100.begin(), t100.end());
    o.check(t10[2] > t100[2], fmt::format("{}: median t_request 10 Mbps {:.4f} s <= 100 Mbps {:.4f} s",
                                          to_string(k), t10[2], t100[2]));
    detail += fmt::format("{} median t_request {:.4f} s @10 vs {:.4f} s @100; ", to_string(k),
                          t10[2], t100[2]);
  }
  const double s = since(t0);
  o.check(s < 60.0, fmt::format("took {:.1f} s", s));
  if (o.pass) o.detail = detail + fmt::format("{:.1f} s", s);
  return o;
}

// 5. 25 MB through the proxy at 10 Mbps measures 8-12 Mbps.
Outcome shaped_throughput() {
  Outcome o;
  OffloadServer server({"127.0.0.1", 0});
  ShapingProxy proxy({"127.0.0.1", 0}, server.endpoint(), LinkParams::from_mbps(10));
  const LinkReport r = selftest_link(proxy.endpoint(), 10e6, 25'000'000, 0.20);
  const double mbps = r.measured_bps / 1e6;
  o.check(mbps >= 8.0 && mbps <= 12.0, fmt::format("measured {:.3f} Mbps", mbps));
  o.detail = fmt::format("measured {:.3f} Mbps over {:.2f} s ({:.1f}% from configured; "
                         "local target 10%: {})",
                         mbps, r.elapsed_s, 100 * r.relative_error(),
                         r.relative_error() <= 0.10 ? "met" : "missed");
  return o;
}

// 6. Metrics on the checked-in synthetic table against values worked out by
// hand (tests/fixtures/synthetic_oracle.py).
Outcome metrics_oracle() {
  Outcome o;
  const auto records =
      read_records_csv(std::filesystem::path(oracle::fixture("synthetic_timings.csv")));
  const Report rep = analyze(records);
  const std::uint64_t r10 = 10'000'000, r100 = 100'000'000;

  struct Cell {
    OpKind op;
    std::uint64_t rate;
    const char* codec;
    double local, local_ci, remote, remote_ci, comm, comm_ci, ratio, alt;
    int bit;
    double penalty;
    std::size_t clamped;
  };
  const double ci_a = 0.4968275735559104, ci_b = 0.24841378677795534;
  const Cell cells[] = {
      {OpKind::kMul, r10, "json", 2.0, ci_a, 3.1999999999999997, ci_b, 2.1, ci_b,
       0.9375000000000001, 1.0, 0, 1.1999999999999997, 0},
      {OpKind::kMul, r10, "ujson", 2.0, ci_a, 2.4000000000000004, ci_b, 1.7, ci_b,
       0.9166666666666666, 0.7500000000000002, 0, 0.40000000000000036, 0},
      {OpKind::kMul, r10, "raw", 2.0, ci_a, 1.8, ci_b, 1.4800000000000002, ci_b,
       0.888888888888889, 0.5625000000000001, 1, 0.0, 0},
      {OpKind::kMul, r100, "json", 2.0, ci_a, 1.9000000000000001, ci_b, 0.7999999999999999, ci_b,
       0.8947368421052629, 1.0, 1, 0.0, 0},
      {OpKind::kMul, r100, "ujson", 2.0, ci_a, 1.3, ci_b, 0.6, ci_b, 0.8461538461538461,
       0.6842105263157895, 1, 0.0, 0},
      {OpKind::kMul, r100, "raw", 2.0, ci_a, 0.7000000000000001, ci_b, 0.37999999999999995, ci_b,
       0.7142857142857141, 0.368421052631579, 1, 0.0, 0},
      {OpKind::kInv, r10, "json", 0.5, 0.0, 3.0999999999999996, ci_b, 2.1799999999999997, ci_b,
       0.9935483870967742, 1.0, 0, 2.5999999999999996, 0},
      {OpKind::kInv, r10, "ujson", 0.5, 0.0, 2.3000000000000003, ci_b, 1.78, ci_b,
       0.9913043478260869, 0.7419354838709679, 0, 1.8000000000000003, 0},
      {OpKind::kInv, r10, "raw", 0.5, 0.0, 1.7, ci_b, 1.5599999999999998, ci_b,
       0.9882352941176471, 0.5483870967741936, 0, 1.2, 0},
      {OpKind::kInv, r100, "json", 0.5, 0.0, 1.8, ci_b, 0.88, ci_b, 0.9888888888888887, 1.0, 0,
       1.3, 0},
      {OpKind::kInv, r100, "ujson", 0.5, 0.0, 1.2, ci_b, 0.68, ci_b, 0.9833333333333333,
       0.6666666666666666, 0, 0.7, 0},
      {OpKind::kInv, r100, "raw", 0.5, 0.0, 0.6000000000000001, ci_b, 0.0, 0.0,
       0.8333333333333334, 0.33333333333333337, 0, 0.10000000000000009, 3},
  };
  const auto near = [](double a, double b) { return std::abs(a - b) <= 1e-9; };
  const auto exact = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
  std::size_t checked = 0;
  for (const auto& w : cells) {
    const CellReport& c = rep.group(w.op, 8).cell(w.rate, w.codec);
    const std::string name = fmt::format("{} {} {}", to_string(w.op), w.rate, w.codec);
    o.check(near(c.local.mean, w.local) && near(c.local.half_width, w.local_ci),
            name + ": local mean/CI");
    o.check(near(c.remote.mean, w.remote) && near(c.remote.half_width, w.remote_ci),
            name + ": remote mean/CI");
    o.check(near(c.comm.mean, w.comm) && near(c.comm.half_width, w.comm_ci), name + ": comm mean/CI");
    o.check(near(c.marshalling_ratio, w.ratio), name + ": marshalling ratio");
    o.check(near(c.alt_to_baseline, w.alt), name + ": alt-to-baseline ratio");
    o.check(c.decision == w.bit, name + ": decision bit");
    o.check(exact(c.penalty, w.penalty), name + ": penalty");
    o.check(c.clamped == w.clamped, name + ": clamped count");
    ++checked;
  }
  const auto& mul = rep.group(OpKind::kMul, 8);
  const auto& inv = rep.group(OpKind::kInv, 8);
  o.check(mul.decision("json").bits == std::vector<int>{0, 1}, "mul json decision vector");
  o.check(mul.decision("ujson").bits == std::vector<int>{0, 1}, "mul ujson decision vector");
  o.check(mul.decision("raw").bits == std::vector<int>{1, 1}, "mul raw decision vector");
  for (const char* c : {"json", "ujson", "raw"}) {
    o.check(inv.decision(c).bits == std::vector<int>{0, 0}, fmt::format("inv {} decision vector", c));
  }
  o.check(exact(mul.penalties.at("json"), 1.1999999999999997) &&
              exact(mul.penalties.at("ujson"), 0.40000000000000036) &&
              exact(mul.penalties.at("raw"), 0.0),
          "mul cumulative penalty vector");
  o.check(exact(inv.penalties.at("json"), 3.8999999999999995) &&
              exact(inv.penalties.at("ujson"), 2.5) && exact(inv.penalties.at("raw"), 1.3),
          "inv cumulative penalty vector");
  if (o.pass) o.detail = fmt::format("{} cells, 6 decision vectors, 2 penalty vectors match", checked);
  return o;
}

ExperimentConfig grid_config() { return load_config(oracle::config("full_grid.conf")); }

// 7. marshalling_ratio + exec share == 1 on every record of a model run.
Outcome partition() {
  Outcome o;
  std::size_t n = 0;
  double worst = 0.0;
  run_experiment(grid_config(), [&](const ExperimentRecord& r) {
    worst = std::max(worst, std::abs(marshalling_ratio(r.timings) + exec_share(r.timings) - 1.0));
    ++n;
  });
  o.check(worst <= 1e-12, fmt::format("max deviation {:.3g}", worst));
  o.check(n == 3u * 9u * 6u * 3u * 40u, fmt::format("{} records", n));
  if (o.pass) o.detail = fmt::format("{} records, max |sum - 1| = {:.2g}", n, worst);
  return o;
}

// 8. Qualitative orderings of the default model calibration.
Outcome qualitative() {
  Outcome o;
  const auto t0 = Clock::now();
  const ExperimentConfig cfg = grid_config();
  const Report rep = analyze(run_experiment(cfg));
  const std::size_t largest = cfg.sizes.back();
  std::string mul_sums;
  double min_ratio = 1.0;
  for (const auto& g : rep.groups) {
    const std::string name = fmt::format("{} n={}", to_string(g.op), g.n);
    if (g.op != OpKind::kMul) {
      for (const auto& d : g.decisions) o.check(d.count() == 0, name + ": nonzero decision vector");
      for (const auto& c : g.cells) {
        min_ratio = std::min(min_ratio, c.marshalling_ratio);
        o.check(c.marshalling_ratio >= 0.90,
                fmt::format("{}: marshalling ratio {:.4f} < 0.90", name, c.marshalling_ratio));
      }
    } else {
      const int raw = g.decision("raw").count();
      const int uj = g.decision("ujson").count();
      const int js = g.decision("json").count();
      o.check(raw >= uj && uj >= js, fmt::format("{}: sums raw {} ujson {} json {}", name, raw, uj, js));
      if (g.n == largest) {
        o.check(raw == static_cast<int>(cfg.rates_mbps.size()), name + ": RAW not all-ones");
      }
      mul_sums += fmt::format(" {}:{}/{}/{}", g.n, raw, uj, js);
    }
    const double p_raw = g.penalties.at("raw");
    o.check(p_raw <= g.penalties.at("json") && p_raw <= g.penalties.at("ujson"),
            name + ": RAW cumulative penalty exceeds a TEXT codec");
  }
  const double s = since(t0);
  o.check(s < 120.0, fmt::format("took {:.1f} s", s));
  if (o.pass) {
    o.detail = fmt::format("INV/LN all zero, min marshalling ratio {:.3f}; MUL sums raw/ujson/json{}; "
                           "{:.1f} s",
                           min_ratio, mul_sums, s);
  }
  return o;
}

// 9. Two model runs with the same config write identical CSV files.
Outcome determinism() {
  Outcome o;
  const auto dir = std::filesystem::temp_directory_path();
  const auto a = dir / "obench_accept_a.csv";
  const auto b = dir / "obench_accept_b.csv";
  const ExperimentConfig cfg = grid_config();
  run_experiment_to_csv(cfg, a);
  run_experiment_to_csv(cfg, b);
  const auto ba = oracle::read_bytes(a.string());
  const auto bb = oracle::read_bytes(b.string());
  o.check(!ba.empty() && ba == bb, "CSV outputs differ");
  std::filesystem::remove(a);
  std::filesystem::remove(b);
  if (o.pass) o.detail = fmt::format("{} bytes identical", ba.size());
  return o;
}

// 10. Confidence interval half-widths.
Outcome statistics() {
  Outcome o;
  const std::vector<double> xs = {1, 2, 3, 4, 5};
  const MeanCi ci = mean_ci95(xs);
  o.check(std::abs(ci.mean - 3.0) <= 1e-12, fmt::format("mean {}", ci.mean));
  const std::vector<double> flat(40, 0.25);
  o.check(mean_ci95(flat).half_width == 0.0, "constant samples have nonzero half-width");
  o.check(std::abs(ci.half_width - 1.9604) <= 1e-3,
          fmt::format("half-width of {{1..5}} is {:.6f}, expected 1.9604 +- 1e-3 "
                      "(t(0.975,4) * s / sqrt(5) = 2.776445 * 1.581139 / 2.236068)",
                      ci.half_width));
  if (o.pass) o.detail = fmt::format("half-width {:.6f}; constant samples 0", ci.half_width);
  return o;
}

struct Criterion {
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {"codec roundtrip", codec_roundtrip},
      {"RAW framing", raw_framing},
      {"link model", link_model},
      {"live loopback smoke", live_smoke},
      {"shaped-throughput self-test", shaped_throughput},
      {"metrics oracle", metrics_oracle},
      {"decomposition partition", partition},
      {"qualitative model-mode orderings", qualitative},
      {"determinism", determinism},
      {"statistics", statistics},
  };
  std::vector<std::size_t> selected;
  for (int i = 1; i < argc; ++i) {
    const long k = std::strtol(argv[i], nullptr, 10);
    if (k < 1 || k > static_cast<long>(all.size())) {
      fmt::print(stderr, "unknown criterion '{}'\n", argv[i]);
      return 2;
    }
    selected.push_back(static_cast<std::size_t>(k));
  }
  if (selected.empty()) {
    for (std::size_t k = 1; k <= all.size(); ++k) selected.push_back(k);
  }

  int failures = 0;
  for (std::size_t k : selected) {
    Outcome o;
    try {
      o = all[k - 1].run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += o.pass ? 0 : 1;
    fmt::print("criterion {:>2} {} {}: {}\n", k, o.pass ? "PASS" : "FAIL", all[k - 1].title,
               o.detail);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
