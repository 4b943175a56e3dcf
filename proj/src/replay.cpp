#include "citypulse/replay.hpp"

#include <boost/asio.hpp>
#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <set>
#include <thread>

namespace citypulse {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t wall_now_nanos() {
    return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                          std::chrono::system_clock::now().time_since_epoch())
                                          .count());
}

class TcpSink : public RecordSink {
public:
    TcpSink(const std::string& host, const std::string& port) : socket_(ioc_) {
        boost::asio::ip::tcp::resolver resolver(ioc_);
        boost::system::error_code ec;
        auto endpoints = resolver.resolve(host, port, ec);
        if (!ec) boost::asio::connect(socket_, endpoints, ec);
        if (ec) throw std::runtime_error("cannot connect to " + host + ":" + port + ": " + ec.message());
        socket_.set_option(boost::asio::ip::tcp::no_delay(true));
    }

    ~TcpSink() override {
        boost::system::error_code ec;
        socket_.shutdown(boost::asio::ip::tcp::socket::shutdown_send, ec);
        // Wait for the peer to close so every byte is consumed before we go.
        char scratch[256];
        while (!ec) socket_.read_some(boost::asio::buffer(scratch), ec);
        socket_.close(ec);
    }

    void send(const std::vector<std::string>& lines) override {
        buffer_.clear();
        for (const auto& l : lines) {
            buffer_ += l;
            buffer_ += '\n';
        }
        boost::system::error_code ec;
        boost::asio::write(socket_, boost::asio::buffer(buffer_), ec);
        if (ec) throw std::runtime_error("send failed: " + ec.message());
    }

private:
    boost::asio::io_context ioc_;
    boost::asio::ip::tcp::socket socket_;
    std::string buffer_;
};

class HttpSink : public RecordSink {
public:
    HttpSink(const std::string& base, std::string path) : client_(base), path_(std::move(path)) {
        client_.set_keep_alive(true);
        client_.set_read_timeout(30, 0);
    }

    void send(const std::vector<std::string>& lines) override {
        std::string body;
        for (const auto& l : lines) {
            body += l;
            body += '\n';
        }
        auto res = client_.Post(path_, body, "application/x-ndjson");
        if (!res) throw std::runtime_error("POST " + path_ + " failed: " + httplib::to_string(res.error()));
        if (res->status != 200) {
            throw std::runtime_error("POST " + path_ + " returned " + std::to_string(res->status) +
                                     ": " + res->body);
        }
    }

private:
    httplib::Client client_;
    std::string path_;
};

}  // namespace

ScriptError::ScriptError(std::size_t line, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

ReplayScript load_script(std::istream& in) {
    ReplayScript script;
    std::set<std::string> defined;
    std::vector<std::pair<std::size_t, std::string>> referenced;
    std::uint64_t offset = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        MonitoringRecord record;
        try {
            record = parse_record(line);
        } catch (const ParseError& ex) {
            throw ScriptError(lineno, ex.what());
        }
        if (auto* s = std::get_if<StructuralRecord>(&record)) {
            defined.insert(s->structure_hash);
        } else {
            const auto& d = std::get<DynamicRecord>(record);
            offset = std::max(offset, d.start_nanos);
            referenced.emplace_back(lineno, d.structure_hash);
        }
        script.entries.push_back({offset, std::move(record)});
    }
    for (const auto& [ln, hash] : referenced) {
        if (!defined.contains(hash)) throw ScriptError(ln, "structure hash '" + hash + "' is never defined");
    }
    return script;
}

ReplayScript load_script_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load_script(in);
}

DynamicRecord rebase(DynamicRecord record, std::uint64_t base_nanos, double speed) {
    auto scale = [&](std::uint64_t t) {
        return base_nanos + static_cast<std::uint64_t>(std::llround(static_cast<double>(t) / speed));
    };
    record.start_nanos = scale(record.start_nanos);
    record.end_nanos = std::max(record.start_nanos, scale(record.end_nanos));
    return record;
}

DynamicRecord tag_iteration(DynamicRecord record, std::uint64_t iteration) {
    const auto suffix = "#" + std::to_string(iteration);
    record.trace_id += suffix;
    record.span_id += suffix;
    if (record.parent_span_id) *record.parent_span_id += suffix;
    return record;
}

std::unique_ptr<RecordSink> connect_sink(const std::string& target) {
    constexpr std::string_view http_prefix = "http://";
    if (target.rfind(http_prefix, 0) == 0) {
        auto slash = target.find('/', http_prefix.size());
        auto base = target.substr(0, slash);
        auto path = slash == std::string::npos ? std::string("/ingest") : target.substr(slash);
        return std::make_unique<HttpSink>(base, path);
    }
    auto colon = target.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == target.size()) {
        throw std::invalid_argument("target must be host:port or http://host:port, got '" + target + "'");
    }
    return std::make_unique<TcpSink>(target.substr(0, colon), target.substr(colon + 1));
}

void StreamSink::send(const std::vector<std::string>& lines) {
    for (const auto& l : lines) out_ << l << '\n';
}

void StreamSink::flush() { out_.flush(); }

ReplaySummary replay(const ReplayScript& script, std::vector<std::unique_ptr<RecordSink>>& sinks,
                     const ReplayOptions& options) {
    if (!(options.speed > 0.0)) throw std::invalid_argument("speed must be > 0");
    if (sinks.empty()) throw std::invalid_argument("replay needs at least one sink");

    ReplaySummary summary;
    const auto started = Clock::now();
    const auto n = sinks.size();
    // Script time per iteration, with a 1 ms gap so looped iterations never overlap.
    const auto iteration_nanos = script.duration_nanos() + 1'000'000;
    std::vector<std::vector<std::string>> batches(n);

    for (std::uint64_t iter = 0;; ++iter) {
        if (iter > 0 && !options.loop) break;
        if (options.max_iterations != 0 && iter >= options.max_iterations) break;
        if (script.entries.empty()) break;

        const auto base = wall_now_nanos();
        const auto iteration_start = Clock::now();
        std::size_t i = 0;
        while (i < script.entries.size()) {
            if (options.cancelled && options.cancelled()) return summary;
            // Everything due at the same offset goes out as one batch.
            const auto due = script.entries[i].offset_nanos;
            const auto wake = iteration_start + std::chrono::nanoseconds(static_cast<std::int64_t>(
                                                    static_cast<double>(due) / options.speed));
            std::this_thread::sleep_until(wake);
            for (auto& b : batches) b.clear();
            for (; i < script.entries.size() && script.entries[i].offset_nanos == due; ++i) {
                const auto& rec = script.entries[i].record;
                if (const auto* s = std::get_if<StructuralRecord>(&rec)) {
                    for (auto& b : batches) b.push_back(to_wire(*s));
                } else {
                    auto d = std::get<DynamicRecord>(rec);
                    if (options.loop) d = tag_iteration(std::move(d), iter);
                    d = rebase(std::move(d), base, options.speed);
                    auto slot = std::hash<std::string>{}(d.trace_id) % n;
                    batches[slot].push_back(to_wire(d));
                }
                ++summary.records_sent;
            }
            for (std::size_t s = 0; s < n; ++s) {
                if (!batches[s].empty()) sinks[s]->send(batches[s]);
            }
        }
        // Keep the iteration's nominal length before looping again.
        std::this_thread::sleep_until(iteration_start + std::chrono::nanoseconds(static_cast<std::int64_t>(
                                                            static_cast<double>(iteration_nanos) /
                                                            options.speed)));
        if (!options.loop) break;
    }
    for (auto& s : sinks) s->flush();
    summary.duration = Clock::now() - started;
    return summary;
}

void SynthScenario::validate() const {
    if (class_count < 1) throw std::invalid_argument("class count must be >= 1");
    if (package_fanout < 1) throw std::invalid_argument("package fanout must be >= 1");
    if (!(calls_per_second > 0.0)) throw std::invalid_argument("calls per second must be > 0");
    if (!(constructor_fraction >= 0.0 && constructor_fraction <= 1.0)) {
        throw std::invalid_argument("constructor fraction must be in [0, 1]");
    }
    if (max_trace_spans < 1) throw std::invalid_argument("max trace spans must be >= 1");
    for (const auto& p : phases) {
        if (!(p.seconds > 0.0) || !(p.multiplier > 0.0)) {
            throw std::invalid_argument("phases need positive duration and multiplier");
        }
    }
}

SynthStream::SynthStream(SynthScenario scenario) : scenario_(std::move(scenario)), rng_(scenario_.seed) {
    scenario_.validate();
    const auto fanout = scenario_.package_fanout;
    for (std::size_t c = 0; c < scenario_.class_count; ++c) {
        const auto package = "synth.p" + std::to_string(c % fanout) + ".q" +
                             std::to_string((c / fanout) % fanout);
        for (const char* op : {"run", "<init>"}) {
            StructuralRecord s;
            s.hostname = scenario_.hostname;
            s.app_name = scenario_.app_name;
            s.fqn = package + ".C" + std::to_string(c) + "." + op;
            s.structure_hash = "h" + std::to_string(c) + (op[0] == '<' ? "i" : "r");
            structures_.push_back(std::move(s));
        }
    }
}

double SynthStream::rate_at(double seconds) const {
    if (scenario_.phases.empty()) return scenario_.calls_per_second;
    double total = 0.0;
    for (const auto& p : scenario_.phases) total += p.seconds;
    double t = std::fmod(seconds, total);
    for (const auto& p : scenario_.phases) {
        if (t < p.seconds) return scenario_.calls_per_second * p.multiplier;
        t -= p.seconds;
    }
    return scenario_.calls_per_second * scenario_.phases.back().multiplier;
}

void SynthStream::generate_trace() {
    trace_buffer_.clear();
    trace_cursor_ = 0;
    std::uniform_int_distribution<std::size_t> size_dist(1, scenario_.max_trace_spans);
    std::uniform_int_distribution<std::size_t> class_dist(0, scenario_.class_count - 1);
    std::bernoulli_distribution ctor_dist(scenario_.constructor_fraction);

    const auto spans = size_dist(rng_);
    const auto trace_id = "t" + std::to_string(trace_counter_++);
    const auto trace_start = static_cast<std::uint64_t>(std::llround(clock_seconds_ * 1e9));
    std::vector<std::string> ids;
    for (std::size_t j = 0; j < spans; ++j) {
        DynamicRecord d;
        d.trace_id = trace_id;
        d.span_id = trace_id + "." + std::to_string(j);
        if (j > 0) {
            std::uniform_int_distribution<std::size_t> parent_dist(0, j - 1);
            d.parent_span_id = ids[parent_dist(rng_)];
        }
        const auto cls = class_dist(rng_);
        const bool ctor = ctor_dist(rng_);
        d.structure_hash = structures_[2 * cls + (ctor ? 1 : 0)].structure_hash;
        d.start_nanos = trace_start + j * 1000;
        d.end_nanos = d.start_nanos + (spans - j) * 1000;
        ids.push_back(d.span_id);
        trace_buffer_.push_back({trace_start, std::move(d)});
    }
    clock_seconds_ += static_cast<double>(spans) / rate_at(clock_seconds_);
}

ScriptEntry SynthStream::next() {
    if (structure_cursor_ < structures_.size()) {
        return {0, structures_[structure_cursor_++]};
    }
    if (trace_cursor_ >= trace_buffer_.size()) generate_trace();
    ++spans_emitted_;
    return std::move(trace_buffer_[trace_cursor_++]);
}

ReplaySummary synth(SynthStream& stream, RecordSink& sink, const SynthOptions& options) {
    ReplaySummary summary;
    const auto started = Clock::now();
    const auto base = wall_now_nanos();
    const auto limit_nanos = options.duration ? static_cast<std::uint64_t>(options.duration->count())
                                              : std::numeric_limits<std::uint64_t>::max();
    std::vector<std::string> batch;
    std::optional<ScriptEntry> carry;
    while (true) {
        if (options.cancelled && options.cancelled()) break;
        batch.clear();
        // Batch everything due within the next 5 ms of stream time.
        auto entry = carry ? std::move(*carry) : stream.next();
        carry.reset();
        if (entry.offset_nanos >= limit_nanos) break;
        if (options.max_spans && stream.spans_emitted() > *options.max_spans) break;
        const auto horizon = entry.offset_nanos + 5'000'000;
        if (!options.unpaced) {
            std::this_thread::sleep_until(started + std::chrono::nanoseconds(entry.offset_nanos));
        }
        bool stop = false;
        while (true) {
            if (auto* d = std::get_if<DynamicRecord>(&entry.record); d && !options.unpaced) {
                batch.push_back(to_wire(rebase(std::move(*d), base, 1.0)));
            } else {
                batch.push_back(to_wire(entry.record));
            }
            ++summary.records_sent;
            if (batch.size() >= 4096) break;
            entry = stream.next();
            if (entry.offset_nanos >= limit_nanos ||
                (options.max_spans && stream.spans_emitted() > *options.max_spans)) {
                stop = true;
                break;
            }
            if (entry.offset_nanos >= horizon) {
                carry = std::move(entry);
                break;
            }
        }
        sink.send(batch);
        if (stop) break;
    }
    sink.flush();
    summary.duration = Clock::now() - started;
    return summary;
}

}  // namespace citypulse
