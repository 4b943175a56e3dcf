// citypulse: live software-city engine and its load tools.
//
//   citypulse serve  [--tick-seconds S] [--window-size W] [--decay D]
//                    [--http-port P] [--ingest-tcp-port P] [--config FILE]
//   citypulse replay <file> --target host:port [--speed F] [--loop] [--connections N]
//   citypulse synth  --target host:port [--classes N] [--cps R] [--ctor-frac F] [--seed S]
//
// Exit codes: 0 success, 1 I/O or connection error, 2 parse/usage error.

#include "citypulse/config.hpp"
#include "citypulse/engine.hpp"
#include "citypulse/replay.hpp"
#include "citypulse/server.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

extern char** environ;

namespace {

using namespace citypulse;

std::atomic<bool> interrupted{false};

void on_signal(int) { interrupted = true; }

constexpr int exit_io = 1;
constexpr int exit_parse = 2;

struct ServeArgs {
    std::map<std::string, std::string> flags;
    std::string config_path;
    bool strict = false;
    double run_seconds = 0.0;
};

int run_serve(const ServeArgs& args) {
    ConfigSources sources;
    sources.flags = args.flags;
    sources.env = read_env(environ);
    sources.strict = args.strict;
    std::string path = args.config_path;
    if (path.empty() && std::filesystem::exists("citypulse.conf")) path = "citypulse.conf";
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) {
            spdlog::error("cannot read config file {}", path);
            return exit_io;
        }
        std::stringstream text;
        text << in.rdbuf();
        sources.file = parse_config_text(text.str());
    }
    EngineConfig config = load_config(sources);

    Engine engine(config, now_nanos());
    Server server(engine, ServerOptions{"0.0.0.0", config.http_port, config.ingest_tcp_port, config.ui_dir});
    try {
        server.start();
    } catch (const std::exception& ex) {
        spdlog::error("cannot start server: {}", ex.what());
        return exit_io;
    }
    TickScheduler scheduler(engine);
    scheduler.start();
    spdlog::info("tick every {} s, window size {}, decay {}", config.tick_seconds, config.window_size,
                 config.decay);

    const auto started = std::chrono::steady_clock::now();
    while (!interrupted) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        if (args.run_seconds > 0 &&
            std::chrono::steady_clock::now() - started >
                std::chrono::duration<double>(args.run_seconds)) {
            break;
        }
    }
    scheduler.stop();
    server.stop();
    spdlog::info("stopped after {} ticks ({} overruns)", scheduler.ticks(), scheduler.overruns());
    return 0;
}

std::vector<std::unique_ptr<RecordSink>> open_sinks(const std::string& target, std::size_t n) {
    std::vector<std::unique_ptr<RecordSink>> sinks;
    for (std::size_t i = 0; i < std::max<std::size_t>(n, 1); ++i) {
        if (target == "-") {
            sinks.push_back(std::make_unique<StreamSink>(std::cout));
        } else {
            sinks.push_back(connect_sink(target));
        }
    }
    return sinks;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"citypulse - live software city with heat-map overlays"};
    app.require_subcommand(1);
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error");

    // serve
    auto* serve = app.add_subcommand("serve", "Run the ingest + snapshot server");
    ServeArgs serve_args;
    std::map<std::string, std::string> serve_values;
    for (const auto& key : config_keys()) {
        serve->add_option("--" + key, serve_values[key]);
    }
    serve->add_option("--config", serve_args.config_path, "key = value config file");
    serve->add_flag("--strict-config", serve_args.strict, "reject unknown config keys");
    serve->add_option("--run-seconds", serve_args.run_seconds, "exit after this long (0 = forever)");

    // replay
    auto* replay_cmd = app.add_subcommand("replay", "Replay a recorded NDJSON script");
    std::string file;
    std::string target;
    ReplayOptions replay_opts;
    replay_cmd->add_option("file", file)->required();
    replay_cmd->add_option("--target", target, "host:port, http://host:port, or - for stdout")->required();
    replay_cmd->add_option("--speed", replay_opts.speed)->check(CLI::PositiveNumber);
    replay_cmd->add_flag("--loop", replay_opts.loop);
    replay_cmd->add_option("--iterations", replay_opts.max_iterations, "stop a loop after N passes");
    replay_cmd->add_option("--connections", replay_opts.connections)->check(CLI::PositiveNumber);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic workload");
    SynthScenario scenario;
    double duration = 0.0;
    std::uint64_t max_spans = 0;
    std::string synth_target;
    std::vector<std::string> phases;
    synth_cmd->add_option("--target", synth_target, "host:port, http://host:port, or - for stdout")->required();
    synth_cmd->add_option("--classes", scenario.class_count)->check(CLI::PositiveNumber);
    synth_cmd->add_option("--fanout", scenario.package_fanout)->check(CLI::PositiveNumber);
    synth_cmd->add_option("--cps", scenario.calls_per_second)->check(CLI::PositiveNumber);
    synth_cmd->add_option("--ctor-frac", scenario.constructor_fraction)->check(CLI::Range(0.0, 1.0));
    synth_cmd->add_option("--seed", scenario.seed);
    synth_cmd->add_option("--max-trace-spans", scenario.max_trace_spans)->check(CLI::PositiveNumber);
    synth_cmd->add_option("--phase", phases, "SECONDS:MULTIPLIER, repeatable");
    synth_cmd->add_option("--duration", duration, "seconds of stream time (0 = until interrupted)");
    synth_cmd->add_option("--max-spans", max_spans, "stop after N spans");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_parse;
    }
    spdlog::set_level(spdlog::level::from_str(log_level));
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);

    try {
        if (*serve) {
            for (const auto& [key, value] : serve_values) {
                if (serve->count("--" + key) > 0) serve_args.flags[key] = value;
            }
            return run_serve(serve_args);
        }
        if (*replay_cmd) {
            ReplayScript script;
            try {
                script = load_script_file(file);
            } catch (const ScriptError& ex) {
                std::cerr << file << ": " << ex.what() << "\n";
                return exit_parse;
            }
            replay_opts.cancelled = [] { return interrupted.load(); };
            auto sinks = open_sinks(target, target == "-" ? 1 : replay_opts.connections);
            auto summary = replay(script, sinks, replay_opts);
            sinks.clear();
            std::cerr << "sent " << summary.records_sent << " records in "
                      << std::chrono::duration<double>(summary.duration).count() << " s\n";
            return 0;
        }
        if (*synth_cmd) {
            for (const auto& p : phases) {
                auto colon = p.find(':');
                if (colon == std::string::npos) {
                    std::cerr << "--phase expects SECONDS:MULTIPLIER, got " << p << "\n";
                    return exit_parse;
                }
                scenario.phases.push_back({std::stod(p.substr(0, colon)), std::stod(p.substr(colon + 1))});
            }
            SynthStream stream(scenario);
            SynthOptions opts;
            if (duration > 0) {
                opts.duration = std::chrono::nanoseconds(static_cast<std::int64_t>(duration * 1e9));
            }
            if (max_spans > 0) opts.max_spans = max_spans;
            opts.unpaced = synth_target == "-";
            opts.cancelled = [] { return interrupted.load(); };
            auto sinks = open_sinks(synth_target, 1);
            auto summary = synth(stream, *sinks.front(), opts);
            sinks.clear();
            std::cerr << "sent " << summary.records_sent << " records in "
                      << std::chrono::duration<double>(summary.duration).count() << " s\n";
            return 0;
        }
    } catch (const ConfigError& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        return exit_parse;
    } catch (const std::invalid_argument& ex) {
        std::cerr << ex.what() << "\n";
        return exit_parse;
    } catch (const std::exception& ex) {
        std::cerr << ex.what() << "\n";
        return exit_io;
    }
    return 0;
}
