#include "citypulse/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include <sys/socket.h>
#include <sys/time.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <list>
#include <mutex>
#include <sstream>
#include <thread>

namespace citypulse {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

namespace {

constexpr std::size_t max_ingest_body = 256u * 1024 * 1024;

std::string error_body(const std::string& message) { return json{{"error", message}}.dump(); }

std::string query_param(std::string_view target, std::string_view key) {
    auto q = target.find('?');
    if (q == std::string_view::npos) return {};
    auto query = target.substr(q + 1);
    while (!query.empty()) {
        auto amp = query.find('&');
        auto pair = query.substr(0, amp);
        auto eq = pair.find('=');
        if (pair.substr(0, eq) == key) {
            return eq == std::string_view::npos ? std::string{} : std::string(pair.substr(eq + 1));
        }
        if (amp == std::string_view::npos) break;
        query = query.substr(amp + 1);
    }
    return {};
}

std::string_view mime_type(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".html") return "text/html; charset=utf-8";
    if (ext == ".js" || ext == ".mjs") return "text/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json") return "application/json";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".png") return "image/png";
    return "application/octet-stream";
}

void set_send_timeout(tcp::socket& socket, int seconds) {
    timeval tv{seconds, 0};
    ::setsockopt(socket.native_handle(), SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

}  // namespace

class Server::Impl {
public:
    Impl(Engine& engine, ServerOptions options)
        : engine_(engine), options_(std::move(options)), http_acceptor_(ioc_), ingest_acceptor_(ioc_) {}

    ~Impl() { stop(); }

    void start() {
        auto address = asio::ip::make_address(options_.bind_address);
        open(http_acceptor_, {address, options_.http_port});
        open(ingest_acceptor_, {address, options_.ingest_port});
        accept(http_acceptor_, &Impl::http_session);
        accept(ingest_acceptor_, &Impl::ingest_session);
        io_thread_ = std::thread([this] { ioc_.run(); });
        spdlog::info("http on port {}, ingest on port {}", http_port(), ingest_port());
    }

    void stop() {
        if (stopping_.exchange(true)) return;
        ioc_.stop();
        if (io_thread_.joinable()) io_thread_.join();
        beast::error_code ec;
        http_acceptor_.close(ec);
        ingest_acceptor_.close(ec);

        std::list<Session> sessions;
        {
            std::lock_guard lock(sessions_mutex_);
            for (auto& s : sessions_) {
                if (!s.done->load()) ::shutdown(s.fd, SHUT_RDWR);
            }
            sessions.swap(sessions_);
        }
        for (auto& s : sessions) {
            if (s.thread.joinable()) s.thread.join();
        }
    }

    std::uint16_t http_port() const { return http_port_; }
    std::uint16_t ingest_port() const { return ingest_port_; }

private:
    struct Session {
        std::thread thread;
        int fd = -1;
        std::shared_ptr<std::atomic<bool>> done;
    };

    using Handler = void (Impl::*)(tcp::socket&);

    void open(tcp::acceptor& acceptor, const tcp::endpoint& endpoint) {
        acceptor.open(endpoint.protocol());
        acceptor.set_option(asio::socket_base::reuse_address(true));
        acceptor.bind(endpoint);
        acceptor.listen(asio::socket_base::max_listen_connections);
        if (&acceptor == &http_acceptor_) {
            http_port_ = acceptor.local_endpoint().port();
        } else {
            ingest_port_ = acceptor.local_endpoint().port();
        }
    }

    void accept(tcp::acceptor& acceptor, Handler handler) {
        acceptor.async_accept([this, &acceptor, handler](beast::error_code ec, tcp::socket socket) {
            if (ec || stopping_) return;
            spawn(std::move(socket), handler);
            accept(acceptor, handler);
        });
    }

    // One thread per connection; finished threads are reaped on the next accept.
    void spawn(tcp::socket socket, Handler handler) {
        std::lock_guard lock(sessions_mutex_);
        for (auto it = sessions_.begin(); it != sessions_.end();) {
            if (it->done->load()) {
                it->thread.join();
                it = sessions_.erase(it);
            } else {
                ++it;
            }
        }
        auto done = std::make_shared<std::atomic<bool>>(false);
        const int fd = socket.native_handle();
        auto thread = std::thread([this, handler, done, s = std::move(socket)]() mutable {
            try {
                (this->*handler)(s);
            } catch (const std::exception& ex) {
                spdlog::debug("connection ended: {}", ex.what());
            }
            beast::error_code ec;
            s.shutdown(tcp::socket::shutdown_both, ec);
            s.close(ec);
            done->store(true);
        });
        sessions_.push_back(Session{std::move(thread), fd, std::move(done)});
    }

    // --- raw TCP ingestion -------------------------------------------------

    void ingest_session(tcp::socket& socket) {
        std::string pending;
        std::vector<char> chunk(64 * 1024);
        beast::error_code ec;
        while (!stopping_) {
            const auto n = socket.read_some(asio::buffer(chunk), ec);
            if (ec) break;
            pending.append(chunk.data(), n);
            const auto last_nl = pending.rfind('\n');
            if (last_nl == std::string::npos) continue;
            auto report = engine_.ingest_ndjson(std::string_view(pending).substr(0, last_nl + 1));
            log_rejections(report);
            pending.erase(0, last_nl + 1);
        }
        if (!pending.empty()) log_rejections(engine_.ingest_ndjson(pending));
    }

    static void log_rejections(const IngestReport& report) {
        for (const auto& e : report.errors) spdlog::warn("rejected record: {}", e);
    }

    // --- HTTP ----------------------------------------------------------------

    void http_session(tcp::socket& socket) {
        beast::flat_buffer buffer;
        set_send_timeout(socket, 10);
        while (!stopping_) {
            http::request_parser<http::string_body> parser;
            parser.body_limit(max_ingest_body);
            beast::error_code ec;
            http::read(socket, buffer, parser, ec);
            if (ec) return;
            auto req = parser.release();
            if (websocket::is_upgrade(req)) {
                stream_session(socket, std::move(req));
                return;
            }
            auto res = handle(req);
            const bool keep_alive = res.keep_alive();
            http::write(socket, res, ec);
            if (ec || !keep_alive) return;
        }
    }

    http::response<http::string_body> handle(const http::request<http::string_body>& req) {
        const std::string_view target(req.target().data(), req.target().size());
        const auto path = target.substr(0, target.find('?'));

        auto reply = [&](http::status status, std::string body,
                         std::string_view type = "application/json") {
            http::response<http::string_body> res{status, req.version()};
            res.set(http::field::content_type, beast::string_view(type.data(), type.size()));
            res.set(http::field::server, "citypulse");
            res.keep_alive(req.keep_alive());
            res.body() = std::move(body);
            res.prepare_payload();
            return res;
        };

        try {
            if (path == "/ingest") {
                if (req.method() != http::verb::post) {
                    return reply(http::status::method_not_allowed, error_body("use POST"));
                }
                auto report = engine_.ingest_ndjson(req.body());
                log_rejections(report);
                json body{{"accepted", report.accepted},
                          {"rejected", report.rejected},
                          {"errors", report.errors}};
                return reply(report.rejected == 0 ? http::status::ok : http::status::bad_request,
                             body.dump());
            }
            if (req.method() != http::verb::get) {
                return reply(http::status::method_not_allowed, error_body("use GET"));
            }
            if (path == "/api/v1/snapshot/latest") {
                return reply(http::status::ok, engine_.latest()->json);
            }
            if (path == "/api/v1/heatmap") {
                auto metric = query_param(target, "metric");
                auto mode = query_param(target, "mode");
                if (metric.empty()) return reply(http::status::bad_request, error_body("missing metric"));
                if (mode.empty()) mode = "snapshot";
                return reply(http::status::ok, to_json(engine_.heatmap(metric, mode)).dump());
            }
            if (path == "/api/v1/metrics") {
                json list = json::array();
                for (const auto& d : engine_.registry().descriptors()) list.push_back(to_json(d));
                return reply(http::status::ok, list.dump());
            }
            if (path == "/api/v1/stream") {
                return reply(http::status::upgrade_required, error_body("WebSocket upgrade required"));
            }
            if (!options_.ui_dir.empty()) {
                if (auto file = static_file(path)) {
                    return reply(http::status::ok, std::move(file->first), file->second);
                }
            }
            return reply(http::status::not_found, error_body("no route for " + std::string(path)));
        } catch (const NotFound& ex) {
            return reply(http::status::not_found, error_body(ex.what()));
        } catch (const BadRequest& ex) {
            return reply(http::status::bad_request, error_body(ex.what()));
        } catch (const std::exception& ex) {
            spdlog::error("request {} failed: {}", std::string(target), ex.what());
            return reply(http::status::internal_server_error, error_body(ex.what()));
        }
    }

    std::optional<std::pair<std::string, std::string_view>> static_file(std::string_view path) {
        if (path.find("..") != std::string_view::npos) return std::nullopt;
        std::filesystem::path file = options_.ui_dir;
        file /= path == "/" ? std::string("index.html") : std::string(path.substr(1));
        std::ifstream in(file, std::ios::binary);
        if (!in || std::filesystem::is_directory(file)) return std::nullopt;
        std::ostringstream out;
        out << in.rdbuf();
        return std::pair{out.str(), mime_type(file)};
    }

    // --- WebSocket stream --------------------------------------------------

    void stream_session(tcp::socket& socket, http::request<http::string_body> req) {
        websocket::stream<tcp::socket&> ws(socket);
        ws.accept(req);
        auto sub = engine_.bus().subscribe();
        beast::error_code ec;
        beast::flat_buffer incoming;
        bool peer_closed = false;
        while (!stopping_) {
            // Client frames are only control traffic; reading them lets Beast
            // answer pings and complete a client-initiated close.
            if (socket.available(ec) > 0) {
                ws.read(incoming, ec);
                incoming.consume(incoming.size());
                if (ec) {
                    peer_closed = true;
                    break;
                }
            }
            auto snap = sub->next(std::chrono::milliseconds(50));
            if (!snap) {
                if (sub->closed()) break;
                continue;
            }
            ws.text(true);
            ws.write(asio::buffer(snap->json), ec);
            if (ec) break;
        }
        sub->close();
        if (!peer_closed) ws.close(websocket::close_code::going_away, ec);
    }

    Engine& engine_;
    ServerOptions options_;
    asio::io_context ioc_;
    tcp::acceptor http_acceptor_;
    tcp::acceptor ingest_acceptor_;
    std::thread io_thread_;
    std::atomic<bool> stopping_{false};
    std::uint16_t http_port_ = 0;
    std::uint16_t ingest_port_ = 0;
    std::mutex sessions_mutex_;
    std::list<Session> sessions_;
};

Server::Server(Engine& engine, ServerOptions options)
    : impl_(std::make_unique<Impl>(engine, std::move(options))) {}

Server::~Server() = default;

void Server::start() { impl_->start(); }
void Server::stop() { impl_->stop(); }
std::uint16_t Server::http_port() const { return impl_->http_port(); }
std::uint16_t Server::ingest_port() const { return impl_->ingest_port(); }

}  // namespace citypulse
