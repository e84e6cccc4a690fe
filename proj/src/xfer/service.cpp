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

#include "xfer/service.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

namespace xfer {

using wire::Frame;
using wire::MsgType;

wire::Frame error_frame(std::uint64_t session_id, ErrorCode code, const std::string& message) {
    return wire::make_frame(MsgType::Error, session_id,
                            wire::encode_error({static_cast<std::uint32_t>(code), message}));
}

// ---------------------------------------------------------------------------
// Service

std::size_t Service::session_count() const {
    std::lock_guard lock(registry_mutex_);
    return sessions_.size();
}

std::shared_ptr<Service::Session> Service::find(std::uint64_t id) const {
    std::lock_guard lock(registry_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) {
        fail(ErrorCode::UnknownSession, "no live session " + std::to_string(id));
    }
    return it->second;
}

Frame Service::handle(const Frame& request) {
    const std::uint64_t sid = request.header.session_id;
    try {
        return dispatch(request);
    } catch (const Error& e) {
        return error_frame(sid, e.code(), e.what());
    } catch (const std::bad_alloc&) {
        return error_frame(sid, ErrorCode::Internal, "out of memory");
    } catch (const std::exception& e) {
        return error_frame(sid, ErrorCode::Internal, e.what());
    } catch (...) {
        return error_frame(sid, ErrorCode::Internal, "unknown error");
    }
}

Frame Service::dispatch(const Frame& request) {
    if (request.header.version != wire::kVersion) {
        fail(ErrorCode::VersionMismatch,
             "protocol version " + std::to_string(request.header.version) + " not supported (server speaks " +
                 std::to_string(wire::kVersion) + ")");
    }
    if (request.header.payload_len != request.payload.size()) {
        fail(ErrorCode::MalformedFrame, "payload_len does not match payload");
    }
    const auto raw = request.header.msg_type;
    if (raw < 1 || raw > 6) {
        fail(ErrorCode::UnknownMessageType, "unsupported request type " + std::to_string(raw));
    }
    const auto type = static_cast<MsgType>(raw);
    if (type == MsgType::InitSession) {
        return init_session(request);
    }
    if (type == MsgType::CloseSession) {
        if (!request.payload.empty()) {
            fail(ErrorCode::MalformedFrame, "CLOSE_SESSION carries no payload");
        }
        std::lock_guard lock(registry_mutex_);
        if (sessions_.erase(request.header.session_id) == 0) {
            fail(ErrorCode::UnknownSession,
                 "no live session " + std::to_string(request.header.session_id));
        }
        return wire::make_frame(MsgType::Ok, request.header.session_id);
    }

    auto session = find(request.header.session_id);
    std::lock_guard lock(session->mutex);
    switch (type) {
        case MsgType::PutReference: return put_reference(*session, request);
        case MsgType::Rearrange: return rearrange(*session, request);
        case MsgType::Adain: return adain(*session, request);
        case MsgType::ReadoutFlow: return readout_flow(*session, request);
        default: break;
    }
    fail(ErrorCode::UnknownMessageType, "unsupported request type");
}

Frame Service::init_session(const Frame& request) {
    SessionConfig config = wire::decode_config(request.payload);
    std::sort(config.inject_layers.begin(), config.inject_layers.end());
    config.inject_layers.erase(std::unique(config.inject_layers.begin(), config.inject_layers.end()),
                               config.inject_layers.end());
    config.validate();
    auto session = std::make_shared<Session>();
    session->config = std::move(config);
    std::lock_guard lock(registry_mutex_);
    const std::uint64_t id = next_id_++;
    sessions_.emplace(id, std::move(session));
    return wire::make_frame(MsgType::Ok, id);
}

namespace {

void require_step(const SessionConfig& config, int t) {
    if (t < 1 || t > config.total_steps) {
        fail(ErrorCode::InvalidArgument,
             "timestep " + std::to_string(t) + " outside [1, " + std::to_string(config.total_steps) + "]");
    }
}

}  // namespace

Frame Service::put_reference(Session& s, const Frame& request) {
    wire::PutReference msg = wire::decode_put_reference(request.payload);
    require_step(s.config, msg.t);
    PreparedReference prepared(msg.reference, msg.m_ref, s.config.epsilon);
    s.references.insert_or_assign(
        std::make_tuple(msg.object_index, int{msg.t}, int{msg.layer}),
        CachedReference{std::move(msg.reference), std::move(msg.m_ref), std::move(prepared)});
    return wire::make_frame(MsgType::Ok, request.header.session_id);
}

Frame Service::rearrange(Session& s, const Frame& request) {
    const wire::Rearrange msg = wire::decode_rearrange(request.payload);
    require_step(s.config, msg.t);
    const bool active = s.config.injects_at(msg.t, msg.layer);
    const bool readout = s.config.is_readout(msg.t, msg.layer);
    if (!active && !readout) {
        return wire::make_frame(MsgType::TensorResult, request.header.session_id,
                                wire::encode_feature_result(msg.target));
    }

    std::vector<PreparedObject> objects;
    objects.reserve(msg.target_masks.size());
    for (std::uint32_t i = 0; i < msg.target_masks.size(); ++i) {
        auto it = s.references.find(std::make_tuple(i, int{msg.t}, int{msg.layer}));
        if (it == s.references.end()) {
            fail(ErrorCode::MissingReference,
                 "no reference cached for object " + std::to_string(i) + " at t=" +
                     std::to_string(msg.t) + " layer=" + std::to_string(msg.layer));
        }
        objects.push_back({&it->second.reference, &it->second.prepared, &msg.target_masks[i]});
    }
    StepResult result =
        transfer_step_prepared(msg.target, objects, s.config, msg.t, msg.layer, readout, options_);
    if (readout && result.correspondence) {
        s.readout = std::move(result.correspondence);
    }
    return wire::make_frame(MsgType::TensorResult, request.header.session_id,
                            wire::encode_feature_result(result.output));
}

Frame Service::adain(Session& s, const Frame& request) {
    const wire::Adain msg = wire::decode_adain(request.payload);
    require_step(s.config, msg.t);
    if (!s.config.adain_at(msg.t)) {
        return wire::make_frame(MsgType::TensorResult, request.header.session_id,
                                wire::encode_feature_result(msg.content));
    }
    const FeatureMap out =
        adain_masked(msg.content, msg.style, msg.m_content, msg.m_style, s.config.epsilon);
    return wire::make_frame(MsgType::TensorResult, request.header.session_id,
                            wire::encode_feature_result(out));
}

Frame Service::readout_flow(Session& s, const Frame& request) {
    if (!request.payload.empty()) {
        fail(ErrorCode::MalformedFrame, "READOUT_FLOW carries no payload");
    }
    if (!s.readout) {
        fail(ErrorCode::NoReadoutRecorded, "no rearrange has run at the readout step yet");
    }
    return wire::make_frame(MsgType::TensorResult, request.header.session_id,
                            wire::encode_flow_result(correspondence_to_flow(*s.readout)));
}

// ---------------------------------------------------------------------------
// Socket helpers

namespace {

enum class ReadStatus { Ok, Eof, Error };

ReadStatus read_exact(int fd, std::uint8_t* buf, std::size_t n, bool* partial = nullptr) {
    std::size_t got = 0;
    while (got < n) {
        const ssize_t r = ::recv(fd, buf + got, n - got, 0);
        if (r == 0) {
            if (partial) *partial = got != 0;
            return ReadStatus::Eof;
        }
        if (r < 0) {
            if (errno == EINTR) continue;
            return ReadStatus::Error;
        }
        got += static_cast<std::size_t>(r);
    }
    return ReadStatus::Ok;
}

bool write_all(int fd, std::span<const std::uint8_t> bytes) {
    std::size_t sent = 0;
    while (sent < bytes.size()) {
        const ssize_t r = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
        if (r < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        sent += static_cast<std::size_t>(r);
    }
    return true;
}

bool write_frame(int fd, const Frame& frame) {
    Frame copy_header = frame;
    copy_header.header.payload_len = frame.payload.size();
    const auto head = wire::encode_header(copy_header.header);
    return write_all(fd, head) && write_all(fd, frame.payload);
}

addrinfo* resolve(const std::string& host, std::uint16_t port, bool passive) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    if (passive) hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res);
    if (rc != 0) {
        fail(ErrorCode::IoError, "cannot resolve " + host + ": " + ::gai_strerror(rc));
    }
    return res;
}

}  // namespace

// ---------------------------------------------------------------------------
// Server

Server::Server(ServerOptions options) : options_(std::move(options)), service_(options_.match) {
    addrinfo* res = resolve(options_.host, options_.port, true);
    std::string last_error = "no usable address";
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
        const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
        if (fd < 0) {
            last_error = std::strerror(errno);
            continue;
        }
        const int one = 1;
        ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) {
            listen_fd_ = fd;
            break;
        }
        last_error = std::strerror(errno);
        ::close(fd);
    }
    ::freeaddrinfo(res);
    if (listen_fd_ < 0) {
        fail(ErrorCode::IoError, "cannot listen on " + options_.host + ":" +
                                     std::to_string(options_.port) + ": " + last_error);
    }
    sockaddr_storage addr{};
    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    if (addr.ss_family == AF_INET) {
        port_ = ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
    } else {
        port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port);
    }
    accept_thread_ = std::jthread([this] { accept_loop(); });
}

Server::~Server() {
    stop();
}

void Server::accept_loop() {
    while (running_.load()) {
        pollfd pfd{listen_fd_, POLLIN, 0};
        const int ready = ::poll(&pfd, 1, 100);
        if (ready <= 0) {
            reap_finished();
            continue;
        }
        const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
        if (fd < 0) {
            continue;
        }
        const int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        std::lock_guard lock(connections_mutex_);
        if (!running_.load()) {
            ::close(fd);
            break;
        }
        auto conn = std::make_unique<Connection>();
        conn->fd = fd;
        Connection* raw = conn.get();
        conn->thread = std::jthread([this, raw] {
            serve_connection(*raw);
            raw->done.store(true);
        });
        connections_.push_back(std::move(conn));
    }
}

void Server::reap_finished() {
    std::vector<std::unique_ptr<Connection>> finished;
    {
        std::lock_guard lock(connections_mutex_);
        auto split = std::stable_partition(connections_.begin(), connections_.end(),
                                           [](const auto& c) { return !c->done.load(); });
        std::move(split, connections_.end(), std::back_inserter(finished));
        connections_.erase(split, connections_.end());
    }
    // Destroying a Connection joins its (already finished) thread.
}

void Server::serve_connection(Connection& conn) {
    const int fd = conn.fd;
    std::array<std::uint8_t, wire::kHeaderSize> head{};
    while (running_.load()) {
        if (read_exact(fd, head.data(), head.size()) != ReadStatus::Ok) {
            break;
        }
        wire::Header header;
        try {
            header = wire::decode_header(head);
        } catch (const Error& e) {
            write_frame(fd, error_frame(0, e.code(), e.what()));
            break;
        }
        if (header.payload_len > options_.max_payload) {
            write_frame(fd, error_frame(header.session_id, ErrorCode::MalformedFrame,
                                        "payload_len " + std::to_string(header.payload_len) +
                                            " exceeds the server limit"));
            break;
        }
        Frame request;
        request.header = header;
        request.payload.resize(static_cast<std::size_t>(header.payload_len));
        if (read_exact(fd, request.payload.data(), request.payload.size()) != ReadStatus::Ok) {
            break;
        }
        const Frame response = service_.handle(request);
        if (!write_frame(fd, response)) {
            break;
        }
    }
    // The descriptor is closed by ~Connection once this thread is joined, so
    // stop() can never shut down a recycled fd number.
    ::shutdown(fd, SHUT_RDWR);
}

Server::Connection::~Connection() {
    if (thread.joinable()) {
        thread.join();
    }
    if (fd >= 0) {
        ::close(fd);
    }
}

void Server::stop() {
    std::lock_guard stop_lock(stop_mutex_);
    if (stopped_) {
        return;
    }
    stopped_ = true;
    running_.store(false);
    if (accept_thread_.joinable()) {
        accept_thread_.join();
    }
    std::vector<std::unique_ptr<Connection>> all;
    {
        std::lock_guard lock(connections_mutex_);
        for (auto& c : connections_) {
            ::shutdown(c->fd, SHUT_RDWR);
        }
        all.swap(connections_);
    }
    all.clear();
    ::close(listen_fd_);
    listen_fd_ = -1;
}

void Server::wait() {
    while (running_.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
}

// ---------------------------------------------------------------------------
// Client

Client::Client(const std::string& host, std::uint16_t port) {
    addrinfo* res = resolve(host, port, false);
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
        const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
            fd_ = fd;
            break;
        }
        ::close(fd);
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) {
        fail(ErrorCode::IoError, "cannot connect to " + host + ":" + std::to_string(port));
    }
    const int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

Client::~Client() {
    if (fd_ >= 0) {
        ::close(fd_);
    }
}

void Client::send_bytes(std::span<const std::uint8_t> bytes) {
    if (!write_all(fd_, bytes)) {
        fail(ErrorCode::IoError, "send failed");
    }
}

Frame Client::receive() {
    std::array<std::uint8_t, wire::kHeaderSize> head{};
    if (read_exact(fd_, head.data(), head.size()) != ReadStatus::Ok) {
        fail(ErrorCode::IoError, "connection closed while reading a frame header");
    }
    Frame f;
    f.header = wire::decode_header(head);
    f.payload.resize(static_cast<std::size_t>(f.header.payload_len));
    if (read_exact(fd_, f.payload.data(), f.payload.size()) != ReadStatus::Ok) {
        fail(ErrorCode::IoError, "connection closed mid-frame");
    }
    return f;
}

bool Client::peer_closed() {
    pollfd pfd{fd_, POLLIN, 0};
    if (::poll(&pfd, 1, 1000) <= 0) {
        return false;
    }
    std::uint8_t byte = 0;
    return ::recv(fd_, &byte, 1, MSG_PEEK) == 0;
}

Frame Client::call(const Frame& request) {
    if (!write_frame(fd_, request)) {
        fail(ErrorCode::IoError, "send failed");
    }
    return receive();
}

Frame Client::expect(const Frame& request, MsgType type) {
    Frame response = call(request);
    if (response.type() == MsgType::Error) {
        const auto info = wire::decode_error(response.payload);
        fail(static_cast<ErrorCode>(info.code), info.message);
    }
    if (response.type() != type) {
        fail(ErrorCode::MalformedFrame, "unexpected response type " +
                                            std::to_string(response.header.msg_type));
    }
    return response;
}

std::uint64_t Client::init_session(const SessionConfig& config) {
    return expect(wire::make_frame(MsgType::InitSession, 0, wire::encode_config(config)), MsgType::Ok)
        .header.session_id;
}

void Client::put_reference(std::uint64_t session, const wire::PutReference& msg) {
    expect(wire::make_frame(MsgType::PutReference, session, wire::encode_put_reference(msg)),
           MsgType::Ok);
}

FeatureMap Client::rearrange(std::uint64_t session, const wire::Rearrange& msg) {
    return wire::decode_feature_result(
        expect(wire::make_frame(MsgType::Rearrange, session, wire::encode_rearrange(msg)),
               MsgType::TensorResult)
            .payload);
}

FeatureMap Client::adain(std::uint64_t session, const wire::Adain& msg) {
    return wire::decode_feature_result(
        expect(wire::make_frame(MsgType::Adain, session, wire::encode_adain(msg)),
               MsgType::TensorResult)
            .payload);
}

FlowMap Client::readout_flow(std::uint64_t session) {
    return wire::decode_flow_result(
        expect(wire::make_frame(MsgType::ReadoutFlow, session), MsgType::TensorResult).payload);
}

void Client::close_session(std::uint64_t session) {
    expect(wire::make_frame(MsgType::CloseSession, session), MsgType::Ok);
}

}  // namespace xfer
