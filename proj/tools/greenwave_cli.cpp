#include <cmath>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <pthread.h>

#include "CLI11.hpp"
#include "httplib.h"

#include "greenwave/demo.hpp"
#include "greenwave/nmea.hpp"
#include "greenwave/report.hpp"
#include "greenwave/scenario.hpp"
#include "greenwave/server.hpp"
#include "greenwave/sim.hpp"

namespace fs = std::filesystem;
using namespace greenwave;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitInvalid = 2;

struct RunOptions {
  std::string scenario;
  std::vector<std::string> modes;
  std::optional<std::uint64_t> seed;
  std::string out = "greenwave-out";
};

struct ServeOptions {
  std::string scenario;
  std::string listen = "127.0.0.1:8080";
  double speed = 1.0;
  std::string out = "greenwave-out";
  std::optional<std::uint64_t> seed;
};

struct ParseOptions {
  std::string file;
};

struct DemoOptions {
  std::uint64_t seed = 7;
  std::string out;
};

int load(const std::string& path, std::optional<std::uint64_t> seed, sim::Scenario& sc) {
  auto loaded = scenario::load_file(path);
  if (!loaded) {
    std::cerr << "error: " << loaded.error().reason << "\n";
    return loaded.error().kind == scenario::LoadFailure::Io ? kExitIo : kExitInvalid;
  }
  sc = std::move(*loaded);
  if (seed) sc.sim.seed = *seed;
  return kExitOk;
}

bool write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary);
  f << text;
  return static_cast<bool>(f);
}

int cmd_run(const RunOptions& opt) {
  sim::Scenario sc;
  if (int rc = load(opt.scenario, opt.seed, sc); rc != kExitOk) return rc;
  std::vector<sim::SimMode> modes;
  for (const auto& m : opt.modes) modes.push_back(*sim::parse_mode(m));
  if (modes.empty()) modes.push_back(sc.sim.mode);

  std::vector<sim::RunMetrics> runs;
  for (sim::SimMode mode : modes) {
    auto result = sim::run(sc, mode);
    if (!result) {
      std::cerr << "error: " << result.error().reason << "\n";
      return kExitInvalid;
    }
    const fs::path dir = fs::path(opt.out) / sim::to_string(mode);
    const bool ok = write_text(dir / "report.json", report::to_json(result->metrics).dump(2) + "\n") &&
                    write_text(dir / "events.jsonl", result->event_log);
    if (!ok) {
      std::cerr << "error: cannot write reports under " << dir.string() << "\n";
      return kExitIo;
    }
    std::cout << report::table(result->metrics);
    std::cout << "report " << (dir / "report.json").string() << "\n\n";
    runs.push_back(std::move(result->metrics));
  }
  for (std::size_t i = 1; i < runs.size(); ++i) std::cout << report::comparison(runs[0], runs[i]);
  return kExitOk;
}

std::optional<std::pair<std::string, int>> split_listen(const std::string& listen) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) return std::nullopt;
  try {
    const int port = std::stoi(listen.substr(colon + 1));
    if (port < 0 || port > 65535) return std::nullopt;
    return std::pair{listen.substr(0, colon), port};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

int cmd_serve(const ServeOptions& opt) {
  sim::Scenario sc;
  if (int rc = load(opt.scenario, opt.seed, sc); rc != kExitOk) return rc;
  auto addr = split_listen(opt.listen);
  if (!addr) {
    std::cerr << "error: --listen must be HOST:PORT\n";
    return kExitInvalid;
  }

  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

  server::LiveRun run(std::move(sc), opt.speed);
  httplib::Server http;
  http.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
  });
  server::install_routes(http, run);
  int port = addr->second;
  if (port == 0) {
    port = http.bind_to_any_port(addr->first);
    if (port < 0) {
      std::cerr << "error: cannot listen on " << opt.listen << "\n";
      return kExitIo;
    }
  } else if (!http.bind_to_port(addr->first, port)) {
    std::cerr << "error: cannot listen on " << opt.listen << " (port in use?)\n";
    return kExitIo;
  }
  std::cout << "listening on " << addr->first << ":" << port << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&stop_signals, &sig);
    http.stop();
  });
  run.start();
  http.listen_after_bind();
  run.stop();
  waiter.join();

  const fs::path events = fs::path(opt.out) / "serve" / "events.jsonl";
  if (!write_text(events, run.events().to_jsonl())) {
    std::cerr << "error: cannot write " << events.string() << "\n";
    return kExitIo;
  }
  std::cout << "event log " << events.string() << "\n";
  return kExitOk;
}

std::string describe(const nmea::ParseResult& r) {
  char buf[160];
  if (const auto* p = std::get_if<nmea::GeoPosition>(&r)) {
    const auto centis = std::llround(p->utc_time * 100.0);
    std::snprintf(buf, sizeof buf, "%s lat=%.6f lon=%.6f utc=%02lld:%02lld:%02lld.%02lld fix=%d",
                  nmea::to_string(p->source_sentence), p->latitude, p->longitude, centis / 360000, centis / 6000 % 60,
                  centis / 100 % 60, centis % 100, p->fix_quality);
    return buf;
  }
  if (const auto* u = std::get_if<nmea::Unsupported>(&r)) return "Unsupported " + u->sentence_type;
  return nmea::to_string(std::get<nmea::NmeaError>(r));
}

int cmd_parse(const ParseOptions& opt) {
  std::ifstream f(opt.file, std::ios::binary);
  if (!f) {
    std::cerr << "error: cannot read " << opt.file << "\n";
    return kExitIo;
  }
  std::size_t ok = 0, rejected = 0, unsupported = 0, lineno = 0;
  std::string line;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto r = nmea::parse_sentence(line);
    if (std::holds_alternative<nmea::GeoPosition>(r)) ++ok;
    else if (std::holds_alternative<nmea::Unsupported>(r)) ++unsupported;
    else ++rejected;
    std::cout << lineno << ": " << describe(r) << "\n";
  }
  std::cout << ok << " ok, " << rejected << " rejected";
  if (unsupported > 0) std::cout << ", " << unsupported << " unsupported";
  std::cout << "\n";
  return kExitOk;
}

int cmd_demo(const DemoOptions& opt) {
  demo::GridOptions g;
  g.seed = opt.seed;
  const std::string text = scenario::to_json(demo::grid_city(g)).dump(2) + "\n";
  if (opt.out.empty()) {
    std::cout << text;
    return kExitOk;
  }
  if (!write_text(fs::path(opt.out), text)) {
    std::cerr << "error: cannot write " << opt.out << "\n";
    return kExitIo;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"greenwave: ambulance green-corridor simulator and control room"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "greenwave 1.0.0");

  RunOptions run_opt;
  auto* run = app.add_subcommand("run", "Run a scenario to completion and write reports");
  run->add_option("scenario", run_opt.scenario, "Scenario JSON file")->required();
  run->add_option("--mode", run_opt.modes, "Mode to run: baseline, auto or operator; repeat to compare (default: the scenario's sim.mode)")
      ->check(CLI::IsMember({"baseline", "auto", "operator"}));
  run->add_option("--seed", run_opt.seed, "Override the scenario seed (default: the scenario's sim.seed)");
  run->add_option("--out", run_opt.out, "Output directory; each mode writes <out>/<mode>/report.json and events.jsonl")
      ->capture_default_str();

  ServeOptions serve_opt;
  auto* serve = app.add_subcommand("serve", "Run a scenario in real time behind the control room HTTP API");
  serve->add_option("scenario", serve_opt.scenario, "Scenario JSON file")->required();
  serve->add_option("--listen", serve_opt.listen, "HOST:PORT to listen on; port 0 picks a free port")
      ->capture_default_str();
  serve->add_option("--speed", serve_opt.speed, "Simulated seconds per wall-clock second")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  serve->add_option("--seed", serve_opt.seed, "Override the scenario seed (default: the scenario's sim.seed)");
  serve->add_option("--out", serve_opt.out, "Output directory; the event log goes to <out>/serve/events.jsonl on shutdown")
      ->capture_default_str();

  ParseOptions parse_opt;
  auto* parse = app.add_subcommand("parse", "Decode an NMEA 0183 file, one line per sentence");
  parse->add_option("file", parse_opt.file, "File with one sentence per line")->required();

  DemoOptions demo_opt;
  auto* demo = app.add_subcommand("demo", "Write the 4x4 grid demo scenario");
  demo->add_option("--seed", demo_opt.seed, "Seed for signal offsets and initial queues")->capture_default_str();
  demo->add_option("--out", demo_opt.out, "Output file (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInvalid;
  }

  if (*run) return cmd_run(run_opt);
  if (*serve) return cmd_serve(serve_opt);
  if (*parse) return cmd_parse(parse_opt);
  return cmd_demo(demo_opt);
}
