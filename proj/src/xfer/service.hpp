// Copyright 2026 The xfer Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "xfer/matching.hpp"
#include "xfer/protocol.hpp"
#include "xfer/transfer.hpp"

namespace xfer {

/// Session registry and request dispatch, independent of any transport.
///
/// handle() never throws: every failure becomes an ERROR frame whose code is
/// the numeric ErrorCode. Requests for one session are serialized; different
/// sessions proceed concurrently.
class Service {
public:
    explicit Service(MatchOptions options = {}) : options_(options) {}

    wire::Frame handle(const wire::Frame& request);

    std::size_t session_count() const;

private:
    struct CachedReference {
        FeatureMap reference;
        ObjectMask m_ref;
        PreparedReference prepared;
    };

    struct Session {
        std::mutex mutex;
        SessionConfig config;
        std::map<std::tuple<std::uint32_t, int, int>, CachedReference> references;
        std::optional<CorrespondenceMap> readout;
    };

    wire::Frame dispatch(const wire::Frame& request);
    std::shared_ptr<Session> find(std::uint64_t id) const;

    wire::Frame init_session(const wire::Frame& request);
    wire::Frame put_reference(Session& s, const wire::Frame& request);
    wire::Frame rearrange(Session& s, const wire::Frame& request);
    wire::Frame adain(Session& s, const wire::Frame& request);
    wire::Frame readout_flow(Session& s, const wire::Frame& request);

    MatchOptions options_;
    mutable std::mutex registry_mutex_;
    std::map<std::uint64_t, std::shared_ptr<Session>> sessions_;
    std::uint64_t next_id_ = 1;
};

wire::Frame error_frame(std::uint64_t session_id, ErrorCode code, const std::string& message);

struct ServerOptions {
    std::string host = "127.0.0.1";
    /// 0 binds an ephemeral port; see Server::port().
    std::uint16_t port = 7878;
    std::uint64_t max_payload = wire::kDefaultMaxPayload;
    MatchOptions match;
};

/// Thread-per-connection TCP front end for Service. One request in flight
/// per connection. A frame with a bad magic or an oversized payload_len gets
/// an ERROR reply and the connection is closed, since the stream can no
/// longer be framed; every other malformed request gets an ERROR reply and
/// the connection stays usable.
class Server {
public:
    explicit Server(ServerOptions options);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    std::uint16_t port() const noexcept { return port_; }
    Service& service() noexcept { return service_; }

    /// Stops accepting, closes live connections and joins every thread.
    void stop();
    /// Blocks until stop() is called from another thread.
    void wait();

private:
    struct Connection {
        ~Connection();
        int fd = -1;
        std::atomic<bool> done{false};
        std::jthread thread;
    };

    void accept_loop();
    void serve_connection(Connection& conn);
    void reap_finished();

    ServerOptions options_;
    Service service_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> running_{true};
    std::mutex connections_mutex_;
    std::vector<std::unique_ptr<Connection>> connections_;
    std::jthread accept_thread_;
    std::mutex stop_mutex_;
    bool stopped_ = false;
};

/// Blocking client for the wire protocol. ERROR replies surface as Error with
/// the server's code; use call() to see raw frames.
class Client {
public:
    Client(const std::string& host, std::uint16_t port);
    ~Client();

    Client(const Client&) = delete;
    Client& operator=(const Client&) = delete;

    wire::Frame call(const wire::Frame& request);
    void send_bytes(std::span<const std::uint8_t> bytes);
    wire::Frame receive();
    /// True once the peer has closed the connection.
    bool peer_closed();

    std::uint64_t init_session(const SessionConfig& config);
    void put_reference(std::uint64_t session, const wire::PutReference& msg);
    FeatureMap rearrange(std::uint64_t session, const wire::Rearrange& msg);
    FeatureMap adain(std::uint64_t session, const wire::Adain& msg);
    FlowMap readout_flow(std::uint64_t session);
    void close_session(std::uint64_t session);

private:
    wire::Frame expect(const wire::Frame& request, wire::MsgType type);

    int fd_ = -1;
};

}  // namespace xfer
