// Grid search for the default model-mode cost table.
//
// Hard constraints (default grids, seed 1):
//   * n=400 MUL: the TEXT codecs never win; RAW wins at the top rate only.
//   * INV and LN never win, and marshalling is >= 90% of every completion.
//   * MUL decision counts are ordered raw >= ujson >= json at every size and
//     RAW wins at every rate for the largest size.
//   * RAW's cumulative penalty is at most either TEXT codec's at every size.
//   * Fixed per-call codec costs are ordered raw <= ujson <= json.
//   * No cell sits within 1% of its decision border, so small payload-size
//     changes (other seeds) cannot flip a bit.
// Among feasible tables the one closest to the reference marshalling shares
// at 100 Mbps is printed (n=400: raw .72 ujson .82 json .90; n=800: raw .24
// ujson .53 json .64) together with the raw/json completion ratio at n=400
// (.5).
//
// Usage: calibrate_model [seed]   -> cost model file on stdout

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <map>
#include <vector>

#include "obench/obench.hpp"

using namespace obench;

namespace {

struct Sizes {
  std::uint64_t req;
  std::uint64_t resp;
};

struct Eval {
  bool feasible = false;
  double score = std::numeric_limits<double>::infinity();
};

const std::vector<std::string> kLabels = {"json", "ujson", "raw"};

Eval evaluate(const CostModel& m, const ExperimentConfig& cfg,
              const std::map<std::pair<OpKind, std::size_t>, std::map<CodecKind, Sizes>>& bytes) {
  Eval e;
  double score = 0.0;
  for (OpKind op : cfg.ops) {
    for (std::size_t n : cfg.sizes) {
      const double local = model_local_seconds(m, op, n);
      std::map<std::string, int> wins;
      std::map<std::string, double> penalty;
      for (double mbps : cfg.rates_mbps) {
        const LinkParams link = cfg.link(mbps);
        for (const auto& label : kLabels) {
          const CodecCost& c = *m.find_codec(label);
          const Sizes s = bytes.at({op, n}).at(c.wire);
          const StageTimings t = model_timings(m, c, op, n, link, s.req, s.resp);
          const double remote = remote_completion(t);
          if (std::abs(remote - local) / local < 0.01) return e;
          const int bit = decide(local, remote);
          wins[label] += bit;
          penalty[label] += wrong_decision_penalty(local, remote);
          if (op != OpKind::kMul) {
            if (bit || marshalling_ratio(t) < 0.90) return e;
            continue;
          }
          if (n == 400) {
            const bool top = mbps == cfg.rates_mbps.back();
            if (bit != (label == "raw" && top ? 1 : 0)) return e;
          }
          if (n == cfg.sizes.back() && label == "raw" && !bit) return e;
          if (mbps == 100.0 && (n == 400 || n == 800)) {
            static const std::map<std::pair<std::size_t, std::string>, double> target = {
                {{400, "raw"}, .72}, {{400, "ujson"}, .82}, {{400, "json"}, .90},
                {{800, "raw"}, .24}, {{800, "ujson"}, .53}, {{800, "json"}, .64}};
            const double d = marshalling_ratio(t) - target.at({n, label});
            score += d * d;
          }
        }
      }
      if (op == OpKind::kMul && !(wins["raw"] >= wins["ujson"] && wins["ujson"] >= wins["json"])) {
        return e;
      }
      if (penalty["raw"] > penalty["ujson"] || penalty["raw"] > penalty["json"]) return e;
    }
  }
  // raw/json completion ratio at n=400, 100 Mbps.
  const auto ratio_at = [&](std::size_t n) {
    const LinkParams link = cfg.link(100);
    const auto& raw = *m.find_codec("raw");
    const auto& json = *m.find_codec("json");
    const Sizes rs = bytes.at({OpKind::kMul, n}).at(CodecKind::kRaw);
    const Sizes js = bytes.at({OpKind::kMul, n}).at(CodecKind::kText);
    return remote_completion(model_timings(m, raw, OpKind::kMul, n, link, rs.req, rs.resp)) /
           remote_completion(model_timings(m, json, OpKind::kMul, n, link, js.req, js.resp));
  };
  const double d = ratio_at(400) - 0.5;
  score += d * d;
  e.feasible = true;
  e.score = score;
  return e;
}

}  // namespace

int main(int argc, char** argv) {
  ExperimentConfig cfg;
  if (argc > 1) cfg.seed = std::strtoull(argv[1], nullptr, 10);

  std::map<std::pair<OpKind, std::size_t>, std::map<CodecKind, Sizes>> bytes;
  for (OpKind op : cfg.ops) {
    for (std::size_t n : cfg.sizes) {
      const Matrix in = gen_matrix(cfg.seed, n);
      const Matrix out = apply_op(op, in);
      for (CodecKind k : {CodecKind::kText, CodecKind::kRaw}) {
        bytes[{op, n}][k] = {encode(k, in).size(), encode(k, out).size()};
      }
    }
    std::cerr << "payload sizes ready for " << to_string(op) << "\n";
  }

  CostModel best;
  Eval best_eval;
  std::size_t tried = 0;
  std::size_t feasible = 0;
  for (double speedup : {5.0, 10.0, 20.0}) {
    for (double mul : {1.0e-8, 1.1e-8, 1.2e-8, 1.3e-8, 1.4e-8, 1.5e-8, 1.6e-8, 1.8e-8, 2.0e-8}) {
      for (double raw_a : {0.06, 0.08, 0.10, 0.12, 0.15, 0.20}) {
        for (double raw_b : {5e-9, 2e-8, 5e-8}) {
          for (double uj_a : {0.12, 0.15, 0.20, 0.25}) {
            for (double uj_b : {2e-7, 3e-7, 5e-7, 8e-7}) {
              for (double js_a : {0.15, 0.20, 0.25, 0.30}) {
                for (double js_b : {1e-6, 1.5e-6, 2e-6, 3e-6}) {
                  if (raw_a > uj_a || uj_a > js_a) continue;
                  CostModel m;
                  m.server_speedup = speedup;
                  m.ops[OpKind::kMul] = {mul, 3.0};
                  m.ops[OpKind::kInv] = {2.5e-10, 3.0};
                  m.ops[OpKind::kLn] = {5e-8, 2.0};
                  m.codecs = {{"json", {CodecKind::kText, js_a, js_b, js_a, 1.5 * js_b}},
                              {"ujson", {CodecKind::kText, uj_a, uj_b, uj_a, 1.5 * uj_b}},
                              {"raw", {CodecKind::kRaw, raw_a, raw_b, raw_a, raw_b}}};
                  ++tried;
                  const Eval e = evaluate(m, cfg, bytes);
                  if (!e.feasible) continue;
                  ++feasible;
                  if (e.score < best_eval.score) {
                    best_eval = e;
                    best = m;
                  }
                }
              }
            }
          }
        }
      }
    }
  }
  std::cerr << "tried " << tried << " tables, " << feasible << " feasible\n";
  if (!best_eval.feasible) {
    std::cerr << "no feasible calibration\n";
    return 2;
  }
  std::cerr << "best score " << best_eval.score << "\n";
  std::cout << "# Default model-mode cost table (tools/calibrate_model, seed " << cfg.seed << ")\n"
            << dump_cost_model(best);
  return 0;
}
