#pragma once

// Network front ends of a Registry: the HTTP API for consoles and the CLI,
// and the line protocol over TCP for check-posts.

#include <atomic>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "ractdas/error.hpp"
#include "ractdas/registry.hpp"

namespace httplib {
class Server;
}

namespace ractdas {

// 401 BadCredentials/SessionExpired, 403 NotAuthorized/RoleViolation,
// 404 Unknown*/NoOpenReport, 409 conflicts, 400 everything else.
int http_status(ErrorCode code) noexcept;

// Routes:
//   POST   /login            {"login","password"}
//   POST   /password         {"old","new"}
//   POST   /users            {"login","password","role"}
//   POST   /tags             {"owner","tag"}
//   GET    /tags/{tag}
//   POST   /reports/{tag}
//   DELETE /reports/{tag}
//   POST   /release/{checkpost}
//   GET    /events?since=N[&wait_ms=M]
// Authenticated routes take "Authorization: Bearer <token>". Every body
// carries "server_event_id"; errors are {"error","message","server_event_id"}.
class HttpApi {
public:
    explicit HttpApi(Registry& registry);
    ~HttpApi();
    HttpApi(const HttpApi&) = delete;
    HttpApi& operator=(const HttpApi&) = delete;

    // Port 0 picks a free port. Returns the bound port.
    int start(const std::string& host, int port);
    void stop();
    int port() const noexcept { return port_; }

private:
    Registry& registry_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
};

// One thread per connection, one wire::Session each.
class WireServer {
public:
    explicit WireServer(Registry& registry) : registry_(registry) {}
    ~WireServer();
    WireServer(const WireServer&) = delete;
    WireServer& operator=(const WireServer&) = delete;

    int start(const std::string& host, int port);
    void stop();
    int port() const noexcept { return port_; }

private:
    void accept_loop();
    void serve(int fd);

    Registry& registry_;
    int listen_fd_ = -1;
    int port_ = 0;
    std::atomic<bool> running_{false};
    std::thread acceptor_;
    std::mutex conn_mu_;
    std::list<int> conn_fds_;
    std::list<std::thread> conn_threads_;
};

}  // namespace ractdas
