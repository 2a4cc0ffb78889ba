#include "ractdas/client.hpp"

#include <netdb.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <charconv>

#include "ractdas/api_json.hpp"
#include "httplib.h"

namespace ractdas {

namespace {

using api::json;

[[noreturn]] void unreachable(const std::string& what) { fail(ErrorCode::RegistryUnreachable, what); }

}  // namespace

Address parse_address(std::string_view text) {
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos) fail(ErrorCode::MalformedMessage, "address must be host:port");
    Address a;
    if (colon > 0) a.host = std::string(text.substr(0, colon));
    const std::string_view port = text.substr(colon + 1);
    const auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), a.port);
    if (ec != std::errc{} || ptr != port.data() + port.size() || a.port < 0 || a.port > 65535) {
        fail(ErrorCode::MalformedMessage, "bad port in '" + std::string(text) + "'");
    }
    return a;
}

std::string to_string(const Address& a) { return a.host + ":" + std::to_string(a.port); }

struct HttpClient::Reply {
    json body;
};

HttpClient::HttpClient(const Address& address, std::chrono::milliseconds timeout)
    : http_(std::make_unique<httplib::Client>(address.host, address.port)), base_(to_string(address)) {
    http_->set_connection_timeout(timeout);
    http_->set_read_timeout(timeout + std::chrono::seconds(35));   // long-poll headroom
    http_->set_write_timeout(timeout);
}

HttpClient::~HttpClient() = default;

HttpClient::Reply HttpClient::call(const char* method, const std::string& path, const std::string& body) {
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
    httplib::Result res;
    const std::string m = method;
    if (m == "GET") {
        res = http_->Get(path, headers);
    } else if (m == "DELETE") {
        res = http_->Delete(path, headers);
    } else {
        res = http_->Post(path, headers, body, "application/json");
    }
    if (!res) unreachable("registry at " + base_ + " unreachable: " + httplib::to_string(res.error()));
    json j;
    try {
        j = json::parse(res->body);
    } catch (const json::exception&) {
        unreachable("registry at " + base_ + " sent a non-JSON reply (HTTP " + std::to_string(res->status) + ")");
    }
    if (j.contains("server_event_id")) server_event_id_ = j["server_event_id"].get<std::uint64_t>();
    if (res->status >= 400) {
        const std::string name = j.value("error", "");
        const auto code = error_from_name(name);
        if (!code) unreachable("registry at " + base_ + " answered HTTP " + std::to_string(res->status));
        fail(*code, j.value("message", name));
    }
    return {std::move(j)};
}

Session HttpClient::login(const std::string& login, const std::string& password) {
    Session s = api::session_from(call("POST", "/login", json{{"login", login}, {"password", password}}.dump()).body);
    token_ = s.token;
    return s;
}

void HttpClient::change_password(const std::string& old_password, const std::string& new_password) {
    call("POST", "/password", json{{"old", old_password}, {"new", new_password}}.dump());
}

UserAccount HttpClient::register_user(const std::string& login, const std::string& password, Role role) {
    return api::user_from(
        call("POST", "/users", json{{"login", login}, {"password", password}, {"role", role_name(role)}}.dump()).body);
}

TagRecord HttpClient::register_tag(const std::string& owner_login, const TagId& tag) {
    return api::tag_from(call("POST", "/tags", json{{"owner", owner_login}, {"tag", tag.str()}}.dump()).body);
}

TagRecord HttpClient::tag(const TagId& tag) { return api::tag_from(call("GET", "/tags/" + tag.str(), "").body); }

TheftReport HttpClient::report_stolen(const TagId& tag) {
    return api::report_from(call("POST", "/reports/" + tag.str(), "").body);
}

TheftReport HttpClient::clear_report(const TagId& tag) {
    return api::report_from(call("DELETE", "/reports/" + tag.str(), "").body);
}

GateView HttpClient::release_gate(const std::string& checkpost_id) {
    return api::gate_from(call("POST", "/release/" + checkpost_id, "").body);
}

EventPage HttpClient::events(std::uint64_t since, std::chrono::milliseconds wait) {
    std::string path = "/events?since=" + std::to_string(since);
    if (wait.count() > 0) path += "&wait_ms=" + std::to_string(wait.count());
    const json j = call("GET", path, "").body;
    EventPage page;
    for (const auto& e : j.at("events")) page.events.push_back(api::event_from(e));
    page.server_event_id = server_event_id_;
    return page;
}

WireClient::WireClient(const Address& address, std::chrono::milliseconds timeout) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(address.port);
    if (::getaddrinfo(address.host.c_str(), service.c_str(), &hints, &res) != 0 || !res) {
        unreachable("cannot resolve " + address.host);
    }
    fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
    tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
    if (fd_ >= 0) {
        ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
        ::setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
    }
    const bool ok = fd_ >= 0 && ::connect(fd_, res->ai_addr, res->ai_addrlen) == 0;
    ::freeaddrinfo(res);
    if (!ok) {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
        unreachable("cannot connect to wire server at " + to_string(address));
    }
}

WireClient::~WireClient() {
    if (fd_ >= 0) ::close(fd_);
}

std::string WireClient::exchange(std::string_view line) {
    std::string out(line);
    out.push_back('\n');
    std::size_t off = 0;
    while (off < out.size()) {
        const ssize_t n = ::send(fd_, out.data() + off, out.size() - off, MSG_NOSIGNAL);
        if (n <= 0) unreachable("wire connection lost while sending");
        off += static_cast<std::size_t>(n);
    }
    std::size_t nl;
    while ((nl = pending_.find('\n')) == std::string::npos) {
        char chunk[256];
        const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
        if (n <= 0) unreachable("wire connection lost while waiting for a reply");
        pending_.append(chunk, static_cast<std::size_t>(n));
    }
    std::string reply = pending_.substr(0, nl);
    pending_.erase(0, nl + 1);
    return reply;
}

wire::Message WireClient::request(const wire::Message& m) { return wire::parse(exchange(wire::format(m))); }

}  // namespace ractdas
