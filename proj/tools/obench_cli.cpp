// obench: command-line front end for the offloading benchmark.
//
//   obench serve --listen ADDR
//   obench proxy --listen ADDR --upstream ADDR --rate-mbps F --latency-ms F
//   obench run --config PATH [--mode live|model] --out PATH
//   obench analyze --in PATH --out PATH [--summary PATH]
//   obench selftest-link --proxy ADDR --rate-mbps F [--bytes N]
//
// Exit codes: 0 success, 1 configuration/usage error, 2 runtime error.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "obench/obench.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

// Blocks SIGINT/SIGTERM in every thread created afterwards; the main thread
// then collects them with sigwait.
sigset_t block_stop_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  return set;
}

void wait_for_stop_signal(const sigset_t& set) {
  int sig = 0;
  sigwait(&set, &sig);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out.flush()) throw std::runtime_error("write to '" + path.string() + "' failed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Computation-offloading benchmark: marshalling-aware offload decisions"};
  app.require_subcommand(1);

  std::string listen_addr = "127.0.0.1:8080";
  auto* serve = app.add_subcommand("serve", "Run the offload server");
  serve->add_option("--listen", listen_addr, "host:port to bind")->required();

  std::string proxy_listen;
  std::string upstream;
  double rate_mbps = 0.0;
  double latency_ms = 0.0;
  std::size_t bucket_bytes = obench::kDefaultBucketBytes;
  auto* proxy = app.add_subcommand("proxy", "Run the token-bucket shaping proxy");
  proxy->add_option("--listen", proxy_listen, "host:port to bind")->required();
  proxy->add_option("--upstream", upstream, "host:port of the offload server")->required();
  proxy->add_option("--rate-mbps", rate_mbps, "shaped rate")->required();
  proxy->add_option("--latency-ms", latency_ms, "one-way latency")->capture_default_str();
  proxy->add_option("--bucket-bytes", bucket_bytes, "token bucket capacity")->capture_default_str();

  std::string config_path;
  std::string mode;
  std::string out_path;
  auto* run = app.add_subcommand("run", "Run an experiment sweep and write the records CSV");
  run->add_option("--config", config_path, "experiment config file")->required();
  run->add_option("--mode", mode, "override the config mode")
      ->check(CLI::IsMember({"live", "model"}));
  run->add_option("--out", out_path, "records CSV (overrides the config's output)");

  std::string in_path;
  std::string report_path;
  std::string summary_path;
  auto* analyze = app.add_subcommand("analyze", "Compute offloading metrics from a records CSV");
  analyze->add_option("--in", in_path, "records CSV")->required();
  analyze->add_option("--out", report_path, "text report")->required();
  analyze->add_option("--summary", summary_path,
                      "plot-ready summary CSV (default: report path with .summary.csv)");

  std::string proxy_addr;
  double selftest_rate = 0.0;
  std::size_t selftest_bytes = 25'000'000;
  double tolerance = 0.10;
  auto* selftest = app.add_subcommand("selftest-link", "Measure a running proxy's shaped link");
  selftest->add_option("--proxy", proxy_addr, "proxy host:port (upstream must be `serve`)")
      ->required();
  selftest->add_option("--rate-mbps", selftest_rate, "configured proxy rate")->required();
  selftest->add_option("--bytes", selftest_bytes, "bulk transfer size")->capture_default_str();
  selftest->add_option("--tolerance", tolerance, "allowed relative throughput error")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*serve) {
      const sigset_t set = block_stop_signals();
      obench::OffloadServer server(obench::Endpoint::parse(listen_addr));
      std::cerr << "serving on " << server.endpoint().to_string() << "\n";
      wait_for_stop_signal(set);
      server.stop();
    } else if (*proxy) {
      const sigset_t set = block_stop_signals();
      const auto link = obench::LinkParams::from_mbps(rate_mbps, latency_ms, bucket_bytes);
      try {
        link.validate();
      } catch (const obench::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
      }
      obench::ShapingProxy p(obench::Endpoint::parse(proxy_listen),
                             obench::Endpoint::parse(upstream), link);
      std::cerr << "proxy " << p.endpoint().to_string() << " -> " << upstream << " at "
                << rate_mbps << " Mbps, " << latency_ms << " ms\n";
      wait_for_stop_signal(set);
      p.stop();
    } else if (*run) {
      obench::ExperimentConfig cfg = obench::load_config(config_path);
      if (mode == "live") cfg.mode = obench::RunMode::kLive;
      if (mode == "model") cfg.mode = obench::RunMode::kModel;
      if (!out_path.empty()) cfg.output = out_path;
      if (cfg.output.empty()) throw obench::ConfigError("no output path (--out or output =)");
      const std::size_t rows = obench::run_experiment_to_csv(cfg, cfg.output);
      std::cerr << "wrote " << rows << " records to " << cfg.output << "\n";
    } else if (*analyze) {
      const auto records = obench::read_records_csv(std::filesystem::path(in_path));
      const obench::Report report = obench::analyze(records);
      write_text(report_path, obench::render_text(report));
      if (summary_path.empty()) {
        summary_path = std::filesystem::path(report_path).replace_extension(".summary.csv").string();
      }
      write_text(summary_path, obench::render_summary_csv(report));
    } else if (*selftest) {
      const auto report = obench::selftest_link(obench::Endpoint::parse(proxy_addr),
                                                selftest_rate * 1e6, selftest_bytes, tolerance);
      std::printf("configured %.3f Mbps  measured %.3f Mbps  (%.1f%% error, %zu bytes in %.3f s)\n"
                  "rtt floor %.3f ms\n%s\n",
                  report.configured_bps / 1e6, report.measured_bps / 1e6,
                  100.0 * report.relative_error(), report.bytes, report.elapsed_s,
                  report.rtt_floor_s * 1e3, report.pass ? "PASS" : "FAIL");
      return report.pass ? 0 : kExitRuntime;
    }
  } catch (const obench::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const obench::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
