#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "pgdflow/io.hpp"

namespace pgdflow {

struct HttpReply {
    int status = 200;
    std::string body;  // JSON
};

/// Handlers behind the HTTP routes; pure functions of the archive and the
/// query values (given as strings, as they arrive).
HttpReply api_meta(const Archive& archive);
HttpReply api_evaluate(const Archive& archive, const std::string& mu, const std::string& stride);
HttpReply api_qoi(const Archive& archive, const std::string& samples);

/// Stride giving at most 128 samples per side.
int default_stride(const Mesh2D& mesh);

/// Read-only HTTP front end over one loaded archive. Requests run on the
/// server's worker threads and share the archive without locking.
class ExpansionServer {
public:
    explicit ExpansionServer(std::shared_ptr<const Archive> archive, std::filesystem::path static_dir = {});
    ~ExpansionServer();
    ExpansionServer(const ExpansionServer&) = delete;
    ExpansionServer& operator=(const ExpansionServer&) = delete;

    /// Binds without serving; port 0 picks a free port. Returns the port or -1.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    bool listen_after_bind();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace pgdflow
