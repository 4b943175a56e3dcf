#pragma once

/// @file server.hpp
/// @brief Network front end for an Engine.
///
/// HTTP (one port):
///   POST /ingest                       NDJSON body, same format as TCP
///   GET  /api/v1/snapshot/latest       latest Snapshot JSON (404 before first tick)
///   GET  /api/v1/heatmap?metric=&mode= HeatmapView JSON (400 on unknown metric/mode)
///   GET  /api/v1/metrics               metric descriptors
///   GET  /api/v1/stream                WebSocket; one Snapshot message per tick
///   GET  /<path>                       static files from ui_dir, if configured
///
/// TCP (second port): raw newline-delimited JSON monitoring records.

#include "citypulse/engine.hpp"

#include <cstdint>
#include <memory>
#include <string>

namespace citypulse {

struct ServerOptions {
    std::string bind_address = "0.0.0.0";
    /// 0 picks an ephemeral port; see Server::http_port().
    std::uint16_t http_port = 8080;
    std::uint16_t ingest_port = 9000;
    std::string ui_dir;
};

class Server {
public:
    Server(Engine& engine, ServerOptions options);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds both listeners and starts serving. Throws on bind failure.
    void start();
    /// Closes listeners and all open connections, then joins their threads.
    void stop();

    std::uint16_t http_port() const;
    std::uint16_t ingest_port() const;

private:
    class Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace citypulse
