#include "cli.hpp"

#include <atomic>
#include <csignal>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "protofuzz/bench_targets.hpp"
#include "protofuzz/capture_io.hpp"
#include "protofuzz/error.hpp"
#include "protofuzz/experiment.hpp"

namespace fs = std::filesystem;

namespace protofuzz::cli {
namespace {

std::atomic<Campaign*> g_active_campaign{nullptr};

extern "C" void on_interrupt(int) {
  if (Campaign* c = g_active_campaign.load()) c->request_stop();
}

std::string escape(std::string_view bytes) {
  std::string out;
  for (unsigned char c : bytes) {
    if (c == '\r') {
      out += "\\r";
    } else if (c == '\n') {
      out += "\\n";
    } else if (c == '\\') {
      out += "\\\\";
    } else if (c < 0x20 || c >= 0x7f) {
      static constexpr char kHex[] = "0123456789abcdef";
      out += "\\x";
      out += kHex[c >> 4];
      out += kHex[c & 15];
    } else {
      out += static_cast<char>(c);
    }
  }
  return out;
}

void add_target_options(CLI::App& app, TargetOptions& t) {
  app.add_option("-N,--target", t.spec, "tcp://host:port or builtin:<ftp|rtsp>")
      ->capture_default_str();
  app.add_option("-P,--codec", t.codec, "Codec: ftp, smtp or rtsp (default: the target's)");
  app.add_option("-D,--delay-us", t.delay_us, "Static delay after each send, microseconds (tcp)");
  app.add_option("--sync", t.sync, "Response synchronization for tcp: poll or static")
      ->check(CLI::IsMember({"poll", "static"}))
      ->capture_default_str();
  app.add_option("--poll-timeout-ms", t.poll_timeout_ms, "Readiness wait per response (tcp)")
      ->capture_default_str();
  app.add_option("--launch", t.launch_command, "Server start command (tcp)");
  app.add_option("--cleanup", t.cleanup_command, "Reset script run before each server start (tcp)");
  app.add_flag("--keep-alive", t.keep_alive, "Reuse one server process across sequences (tcp)");
}

void add_geometry_options(CLI::App& app, BitmapGeometry& g) {
  app.add_option("--shift-size", g.shift_size, "Bitmap bytes reserved for state transitions")
      ->capture_default_str();
  app.add_option("--state-size", g.state_size, "Maximum number of distinct states")
      ->capture_default_str();
}

std::vector<MessageSequence> builtin_seed(const Target& target) {
  return {split_requests(*target.codec, happy_path_capture(target.config.builtin))};
}

}  // namespace

Target open_target(const TargetOptions& o, const BitmapGeometry& geometry) {
  Target t;
  t.config = parse_target_spec(o.spec);
  if (t.config.kind == TargetConfig::Kind::kInProcess) {
    if (o.delay_us || o.sync != "poll" || !o.launch_command.empty() ||
        !o.cleanup_command.empty() || o.keep_alive) {
      throw ConfigError("-D, --sync, --launch, --cleanup and --keep-alive apply to tcp targets only");
    }
    const std::string_view own = bench_codec_name(t.config.builtin);
    if (!o.codec.empty() && o.codec != own) {
      throw ConfigError("builtin target speaks " + std::string(own) + ", not " + o.codec);
    }
    t.codec = &codec_by_name(own);
    t.adapter = std::make_unique<InProcessTarget>(t.config.builtin, geometry);
    return t;
  }
  if (o.codec.empty()) throw ConfigError("tcp targets need -P <codec>");
  t.codec = &codec_by_name(o.codec);
  t.config.sync = o.sync == "static" ? SyncMode::kStaticDelay : SyncMode::kPoll;
  t.config.delay_us = o.delay_us.value_or(0);
  if (t.config.sync == SyncMode::kStaticDelay && !o.delay_us) {
    throw ConfigError("--sync static needs -D <delay_us>");
  }
  t.config.poll_timeout_ms = o.poll_timeout_ms;
  t.config.launch_command = o.launch_command;
  t.config.cleanup_command = o.cleanup_command;
  t.config.keep_alive = o.keep_alive;
  t.adapter = std::make_unique<TcpTarget>(t.config, *t.codec);
  return t;
}

void apply_budget(const std::string& text, CampaignConfig& config) {
  if (text.empty()) throw ConfigError("empty budget");
  std::size_t used = 0;
  double value = 0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("bad budget '" + text + "'");
  }
  const std::string unit = text.substr(used);
  if (value < 0) throw ConfigError("budget must not be negative");
  if (unit.empty() || unit == "x") {
    config.max_execs = static_cast<std::uint64_t>(value);
  } else if (unit == "s") {
    config.max_seconds = value;
  } else if (unit == "m") {
    config.max_seconds = value * 60;
  } else if (unit == "h") {
    config.max_seconds = value * 3600;
  } else {
    throw ConfigError("bad budget unit in '" + text + "' (use x, s, m or h)");
  }
}

int cmd_replay(const TargetOptions& options, const fs::path& file, std::ostream& out) {
  Target target = open_target(options, BitmapGeometry{});
  const MessageSequence seq = load_sequence_file(file, *target.codec);
  StateRegistry registry;
  TraceMap trace;
  const ExecOutcome r = send_sequence(*target.adapter, seq, trace, registry, BitmapGeometry{});
  auto codes = [](const std::vector<std::uint32_t>& v) {
    std::string s;
    for (std::uint32_t c : v) s += (s.empty() ? "" : ",") + std::to_string(c);
    return s.empty() ? std::string("-") : s;
  };
  if (!r.banner.empty()) out << "< " << escape(r.banner) << "  [" << codes(r.banner_codes) << "]\n";
  for (std::size_t i = 0; i < seq.message_count(); ++i) {
    out << "> " << escape(seq.message_view(i)) << '\n';
    if (i < r.responses.size()) {
      out << "< " << escape(r.responses[i]) << "  [" << codes(r.message_codes[i]) << "]\n";
    } else if (i < r.messages_sent) {
      out << "< (no response)\n";
    } else {
      out << "  (not sent)\n";
    }
  }
  out << "codes:";
  for (std::uint32_t c : r.banner_codes) out << ' ' << c;
  for (const auto& v : r.message_codes) {
    for (std::uint32_t c : v) out << ' ' << c;
  }
  out << '\n' << "verdict: " << (r.crashed ? "crashed" : "ok") << '\n';
  return r.crashed ? kExitCrash : kExitClean;
}

namespace {

struct FuzzOptions {
  TargetOptions target;
  fs::path in_dir;
  fs::path out_dir;
  std::string state_algo = "FAVOR";
  std::string mode = "FULL";
  std::string budget;
  std::uint64_t seed = 0;
  double max_time_gap = 60.0;
  bool resume = false;
  bool stop_on_crash = false;
  BitmapGeometry geometry;
};

int cmd_fuzz(FuzzOptions& o, std::ostream& out) {
  CampaignConfig cfg;
  cfg.mode = parse_campaign_mode(o.mode);
  cfg.scheduler.state_algo = parse_state_algo(o.state_algo);
  cfg.scheduler.max_time_gap_s = o.max_time_gap;
  cfg.scheduler.rng_seed = o.seed;
  cfg.geometry = o.geometry;
  cfg.out_dir = o.out_dir;
  cfg.stop_on_crash = o.stop_on_crash;
  cfg.target_label = o.target.spec;
  apply_budget(o.budget, cfg);

  Target target = open_target(o.target, cfg.geometry);
  std::vector<MessageSequence> captures = load_captures(o.in_dir, *target.codec);

  if (fs::exists(o.out_dir) && !fs::is_empty(o.out_dir)) {
    if (!o.resume) {
      throw ConfigError("output directory " + o.out_dir.string() + " is not empty (use --resume)");
    }
    const fs::path queue = o.out_dir / "queue";
    if (fs::is_directory(queue)) {
      for (MessageSequence& s : load_captures(queue, *target.codec)) captures.push_back(std::move(s));
    }
    // The previous run stays on disk next to the new one.
    fs::path base = o.out_dir.lexically_normal();
    if (!base.has_filename()) base = base.parent_path();
    fs::path previous = base;
    for (unsigned n = 1; fs::exists(previous); ++n) {
      previous = base.string() + ".prev" + std::to_string(n);
    }
    fs::rename(base, previous);
    out << "previous run moved to " << previous.string() << '\n';
  }

  Campaign campaign(cfg, *target.adapter);
  campaign.preprocess(captures);
  g_active_campaign.store(&campaign);
  auto previous = std::signal(SIGINT, on_interrupt);
  try {
    campaign.run();
  } catch (...) {
    g_active_campaign.store(nullptr);
    std::signal(SIGINT, previous);
    throw;
  }
  g_active_campaign.store(nullptr);
  std::signal(SIGINT, previous);

  const CampaignStats& s = campaign.stats();
  out << "execs " << s.total_execs << "  corpus " << s.corpus_size << "  branches "
      << s.branches_covered << "  states " << s.states_covered << "  transitions "
      << s.transitions_covered << "  crashes " << s.crashes << '\n';
  out << "state machine: " << (o.out_dir / "ipsm.dot").string() << '\n';
  return s.crashes > 0 ? kExitCrash : kExitClean;
}

struct ExperimentOptions {
  TargetOptions target;
  fs::path in_dir;
  fs::path out_dir;
  std::vector<std::string> modes;
  unsigned trials = 10;
  std::string budget;
  std::uint64_t seed = 1;
  std::string state_algo = "FAVOR";
  double max_time_gap = 60.0;
  BitmapGeometry geometry;
};

int cmd_experiment(ExperimentOptions& o, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  for (const std::string& m : o.modes) cfg.modes.push_back(parse_campaign_mode(m));
  cfg.trials = o.trials;
  cfg.base_seed = o.seed;
  cfg.out_dir = o.out_dir;
  cfg.campaign.geometry = o.geometry;
  cfg.campaign.scheduler.state_algo = parse_state_algo(o.state_algo);
  cfg.campaign.scheduler.max_time_gap_s = o.max_time_gap;
  cfg.campaign.target_label = o.target.spec;
  apply_budget(o.budget, cfg.campaign);
  cfg.validate();

  Target probe = open_target(o.target, cfg.campaign.geometry);
  const std::vector<MessageSequence> captures =
      o.in_dir.empty() ? (probe.config.kind == TargetConfig::Kind::kInProcess
                              ? builtin_seed(probe)
                              : throw ConfigError("tcp experiments need -i <captures>"))
                       : load_captures(o.in_dir, *probe.codec);
  probe.adapter.reset();

  const TargetOptions topts = o.target;
  const BitmapGeometry geometry = cfg.campaign.geometry;
  auto factory = [&topts, geometry]() { return open_target(topts, geometry).adapter; };
  auto progress = [&err](CampaignMode m, unsigned t, const CampaignStats& s) {
    err << campaign_mode_name(m) << " trial " << t << ": states " << s.states_covered
        << " transitions " << s.transitions_covered << " branches " << s.branches_covered << '\n';
  };
  const ExperimentResult result = run_experiment(cfg, factory, captures, progress);
  out << format_summary_tsv(result);
  return kExitClean;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"protofuzz: stateful greybox fuzzer for network protocol servers"};
  app.require_subcommand(1);

  FuzzOptions fuzz;
  CLI::App* fuzz_cmd = app.add_subcommand("fuzz", "Run one fuzzing campaign");
  add_target_options(*fuzz_cmd, fuzz.target);
  add_geometry_options(*fuzz_cmd, fuzz.geometry);
  fuzz_cmd->add_option("-i,--input", fuzz.in_dir, "Directory of seed captures")->required();
  fuzz_cmd->add_option("-o,--output", fuzz.out_dir, "Output directory")->required();
  fuzz_cmd->add_option("-q,--state-algo", fuzz.state_algo,
                       "FAVOR, RANDOM, ROUND_ROBIN (or 3, 1, 2)")->capture_default_str();
  fuzz_cmd->add_option("-m,--mode", fuzz.mode, "FULL, QUEUE, IPSM, CODE, DARK or BLACK")
      ->capture_default_str();
  fuzz_cmd->add_option("-b,--budget", fuzz.budget, "Executions (100000) or time (60s, 5m, 2h)")
      ->required();
  fuzz_cmd->add_option("-s,--seed", fuzz.seed, "Random seed")->capture_default_str();
  fuzz_cmd->add_option("--max-time-gap", fuzz.max_time_gap,
                       "Seconds without a find before state-driven selection")
      ->capture_default_str();
  fuzz_cmd->add_flag("--resume", fuzz.resume, "Reseed from an existing output directory's queue");
  fuzz_cmd->add_flag("--stop-on-crash", fuzz.stop_on_crash, "Stop after the first saved crash");

  TargetOptions replay;
  fs::path replay_file;
  CLI::App* replay_cmd = app.add_subcommand("replay", "Replay one sequence file");
  add_target_options(*replay_cmd, replay);
  replay_cmd->add_option("file", replay_file, "Raw sequence (queue or crash entry)")->required();

  ExperimentOptions exp;
  CLI::App* exp_cmd = app.add_subcommand("experiment", "Run a modes x trials matrix");
  add_target_options(*exp_cmd, exp.target);
  add_geometry_options(*exp_cmd, exp.geometry);
  exp_cmd->add_option("-i,--input", exp.in_dir, "Seed captures (default: the builtin session)");
  exp_cmd->add_option("-o,--output", exp.out_dir, "Directory for per-trial artifacts and summary.tsv");
  exp_cmd->add_option("--modes", exp.modes, "Modes to compare; the first is the baseline")
      ->delimiter(',')
      ->required();
  exp_cmd->add_option("--trials", exp.trials, "Trials per mode")->capture_default_str();
  exp_cmd->add_option("-b,--budget", exp.budget, "Budget per trial")->required();
  exp_cmd->add_option("-s,--seed", exp.seed, "Seed of trial 0")->capture_default_str();
  exp_cmd->add_option("-q,--state-algo", exp.state_algo, "FAVOR, RANDOM, ROUND_ROBIN")
      ->capture_default_str();
  exp_cmd->add_option("--max-time-gap", exp.max_time_gap, "Seconds")->capture_default_str();

  std::string serve_target = "ftp";
  std::uint16_t serve_port = 0;
  bool serve_once = false;
  CLI::App* serve_cmd = app.add_subcommand("serve", "Serve a builtin target over TCP");
  serve_cmd->add_option("--target", serve_target, "ftp or rtsp")->capture_default_str();
  serve_cmd->add_option("--port", serve_port, "Port on 127.0.0.1")->required();
  serve_cmd->add_flag("--once", serve_once, "Exit after the first connection");

  std::string seeds_target = "ftp";
  fs::path seeds_out;
  CLI::App* seeds_cmd = app.add_subcommand("seeds", "Write a builtin target's recorded session");
  seeds_cmd->add_option("--target", seeds_target, "ftp or rtsp")->capture_default_str();
  seeds_cmd->add_option("-o,--output", seeds_out, "Directory to create")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitClean : kExitSetupError;
  }

  try {
    if (*fuzz_cmd) return cmd_fuzz(fuzz, out);
    if (*replay_cmd) return cmd_replay(replay, replay_file, out);
    if (*exp_cmd) return cmd_experiment(exp, out, err);
    if (*serve_cmd) return serve_tcp(bench_target_by_name(serve_target), serve_port, serve_once);
    if (*seeds_cmd) {
      const BenchTarget t = bench_target_by_name(seeds_target);
      fs::create_directories(seeds_out);
      write_file(seeds_out / (seeds_target + "_session.raw"), happy_path_capture(t));
      return kExitClean;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitSetupError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitSetupError;
  }
  return kExitSetupError;
}

}  // namespace protofuzz::cli
