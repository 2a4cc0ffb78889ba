#include "ractdas/service.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>

#include "ractdas/api_json.hpp"
#include "httplib.h"
#include "ractdas/wire.hpp"

namespace ractdas {

namespace {

using api::json;

constexpr std::size_t kMaxLine = 1024;
constexpr int kMaxWaitMs = 30000;

std::string bearer(const httplib::Request& req) {
    const std::string h = req.get_header_value("Authorization");
    constexpr std::string_view prefix = "Bearer ";
    return h.starts_with(prefix) ? h.substr(prefix.size()) : std::string();
}

json body_of(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        json j = json::parse(req.body);
        if (!j.is_object()) fail(ErrorCode::MalformedMessage, "request body must be a JSON object");
        return j;
    } catch (const json::exception& e) {
        fail(ErrorCode::MalformedMessage, std::string("bad JSON body: ") + e.what());
    }
}

std::string field(const json& j, const char* name) {
    const auto it = j.find(name);
    if (it == j.end() || !it->is_string()) fail(ErrorCode::MalformedMessage, std::string("missing string field '") + name + "'");
    return it->get<std::string>();
}

void send_all(int fd, const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
        if (n <= 0) return;
        off += static_cast<std::size_t>(n);
    }
}

}  // namespace

int http_status(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::BadCredentials:
        case ErrorCode::SessionExpired: return 401;
        case ErrorCode::NotAuthorized:
        case ErrorCode::RoleViolation: return 403;
        case ErrorCode::UnknownUser:
        case ErrorCode::UnknownOwner:
        case ErrorCode::UnknownTag:
        case ErrorCode::NoOpenReport: return 404;
        case ErrorCode::DuplicateLogin:
        case ErrorCode::DuplicateTag:
        case ErrorCode::AlreadyReported:
        case ErrorCode::GateHoldsStolenTag:
        case ErrorCode::ProtocolOrderViolation: return 409;
        default: return 400;
    }
}

HttpApi::HttpApi(Registry& registry) : registry_(registry), server_(std::make_unique<httplib::Server>()) {
    using Handler = std::function<json(const httplib::Request&)>;
    auto wrap = [this](Handler h) {
        return [this, h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
            json out;
            try {
                out = h(req);
                res.status = 200;
            } catch (const Error& e) {
                out = {{"error", e.name()}, {"message", e.what()}};
                res.status = http_status(e.code());
            } catch (const std::exception& e) {
                out = {{"error", "MalformedMessage"}, {"message", e.what()}};
                res.status = 400;
            }
            out["server_event_id"] = registry_.high_water();
            res.set_content(out.dump(), "application/json");
        };
    };
    auto tag_param = [](const httplib::Request& req) { return TagId::parse(req.matches[1].str()); };

    server_->Post("/login", wrap([this](const httplib::Request& req) {
        const json b = body_of(req);
        return api::to_json(registry_.login(field(b, "login"), field(b, "password")));
    }));
    server_->Post("/password", wrap([this](const httplib::Request& req) {
        const json b = body_of(req);
        registry_.change_password(bearer(req), field(b, "old"), field(b, "new"));
        return json{{"ok", true}};
    }));
    server_->Post("/users", wrap([this](const httplib::Request& req) {
        const json b = body_of(req);
        return api::to_json(registry_.register_user(bearer(req), field(b, "login"), field(b, "password"),
                                                  api::role_from(field(b, "role"))));
    }));
    server_->Post("/tags", wrap([this](const httplib::Request& req) {
        const json b = body_of(req);
        return api::to_json(registry_.register_tag(bearer(req), field(b, "owner"), TagId::parse(field(b, "tag"))));
    }));
    server_->Get(R"(/tags/([^/]+))", wrap([this, tag_param](const httplib::Request& req) {
        return api::to_json(registry_.tag_record(bearer(req), tag_param(req)));
    }));
    server_->Post(R"(/reports/([^/]+))", wrap([this, tag_param](const httplib::Request& req) {
        return api::to_json(registry_.report_stolen(bearer(req), tag_param(req)));
    }));
    server_->Delete(R"(/reports/([^/]+))", wrap([this, tag_param](const httplib::Request& req) {
        return api::to_json(registry_.clear_report(bearer(req), tag_param(req)));
    }));
    server_->Post(R"(/release/([^/]+))", wrap([this](const httplib::Request& req) {
        const std::string cp = req.matches[1].str();
        return api::to_json(cp, registry_.release_gate(bearer(req), cp));
    }));
    server_->Get("/events", wrap([this](const httplib::Request& req) {
        std::uint64_t since = 0;
        int wait_ms = 0;
        try {
            if (req.has_param("since")) since = std::stoull(req.get_param_value("since"));
            if (req.has_param("wait_ms")) wait_ms = std::clamp(std::stoi(req.get_param_value("wait_ms")), 0, kMaxWaitMs);
        } catch (const std::exception&) {
            fail(ErrorCode::MalformedMessage, "since and wait_ms must be integers");
        }
        const auto events = wait_ms > 0 ? registry_.wait_events(since, std::chrono::milliseconds(wait_ms))
                                        : registry_.events_since(since);
        json arr = json::array();
        for (const auto& e : events) arr.push_back(api::to_json(e));
        return json{{"events", arr}};
    }));
}

HttpApi::~HttpApi() { stop(); }

int HttpApi::start(const std::string& host, int port) {
    if (port == 0) {
        port_ = server_->bind_to_any_port(host);
    } else {
        port_ = server_->bind_to_port(host, port) ? port : -1;
    }
    if (port_ <= 0) fail(ErrorCode::RegistryUnreachable, "cannot bind HTTP API to " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

void HttpApi::stop() {
    if (thread_.joinable()) {
        server_->stop();
        thread_.join();
    }
}

WireServer::~WireServer() { stop(); }

int WireServer::start(const std::string& host, int port) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &res) != 0 || !res) {
        fail(ErrorCode::RegistryUnreachable, "cannot resolve " + host);
    }
    listen_fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    const bool ok = listen_fd_ >= 0 && ::bind(listen_fd_, res->ai_addr, res->ai_addrlen) == 0 &&
                    ::listen(listen_fd_, 64) == 0;
    ::freeaddrinfo(res);
    if (!ok) {
        if (listen_fd_ >= 0) ::close(listen_fd_);
        listen_fd_ = -1;
        fail(ErrorCode::RegistryUnreachable, "cannot bind wire server to " + host + ":" + service);
    }
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
    running_ = true;
    acceptor_ = std::thread([this] { accept_loop(); });
    return port_;
}

void WireServer::stop() {
    if (!running_.exchange(false)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
    if (acceptor_.joinable()) acceptor_.join();
    std::list<std::thread> threads;
    {
        std::lock_guard lock(conn_mu_);
        for (int fd : conn_fds_) ::shutdown(fd, SHUT_RDWR);
        threads.swap(conn_threads_);
    }
    for (auto& t : threads) t.join();
}

void WireServer::accept_loop() {
    while (running_) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (!running_) break;
            continue;
        }
        std::lock_guard lock(conn_mu_);
        if (!running_) {
            ::close(fd);
            break;
        }
        conn_fds_.push_back(fd);
        conn_threads_.emplace_back([this, fd] { serve(fd); });
    }
}

void WireServer::serve(int fd) {
    wire::Session session(registry_);
    std::string buf;
    char chunk[512];
    bool open = true;
    while (open) {
        const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
        if (n <= 0) break;
        buf.append(chunk, static_cast<std::size_t>(n));
        std::size_t nl;
        while ((nl = buf.find('\n')) != std::string::npos) {
            const std::string line = buf.substr(0, nl);
            buf.erase(0, nl + 1);
            send_all(fd, session.handle(line) + "\n");
        }
        if (buf.size() > kMaxLine) {
            send_all(fd, wire::format(wire::Err{ErrorCode::MalformedMessage}) + "\n");
            open = false;
        }
    }
    std::lock_guard lock(conn_mu_);
    conn_fds_.remove(fd);
    ::close(fd);
}

}  // namespace ractdas
