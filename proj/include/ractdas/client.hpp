#pragma once

// Clients for a running registry service. Transport failures surface as
// Error(RegistryUnreachable); API errors are rethrown with their own code.

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ractdas/registry.hpp"
#include "ractdas/wire.hpp"

namespace httplib {
class Client;
}

namespace ractdas {

struct Address {
    std::string host = "127.0.0.1";
    int port = 0;
};

// "host:port" or ":port". Throws Error(MalformedMessage).
Address parse_address(std::string_view text);
std::string to_string(const Address& a);

struct EventPage {
    std::vector<RegistryEvent> events;
    std::uint64_t server_event_id = 0;
};

class HttpClient {
public:
    explicit HttpClient(const Address& address, std::chrono::milliseconds timeout = std::chrono::seconds(5));
    ~HttpClient();
    HttpClient(const HttpClient&) = delete;
    HttpClient& operator=(const HttpClient&) = delete;

    // Stores the token for later calls.
    Session login(const std::string& login, const std::string& password);
    void set_token(std::string token) { token_ = std::move(token); }
    const std::string& token() const noexcept { return token_; }

    void change_password(const std::string& old_password, const std::string& new_password);
    UserAccount register_user(const std::string& login, const std::string& password, Role role);
    TagRecord register_tag(const std::string& owner_login, const TagId& tag);
    TagRecord tag(const TagId& tag);
    TheftReport report_stolen(const TagId& tag);
    TheftReport clear_report(const TagId& tag);
    GateView release_gate(const std::string& checkpost_id);
    EventPage events(std::uint64_t since, std::chrono::milliseconds wait = {});

    // High-water mark from the last response.
    std::uint64_t server_event_id() const noexcept { return server_event_id_; }

private:
    struct Reply;
    Reply call(const char* method, const std::string& path, const std::string& body);

    std::unique_ptr<httplib::Client> http_;
    std::string base_;
    std::string token_;
    std::uint64_t server_event_id_ = 0;
};

// Blocking line client for the check-post protocol.
class WireClient {
public:
    explicit WireClient(const Address& address, std::chrono::milliseconds timeout = std::chrono::seconds(5));
    ~WireClient();
    WireClient(const WireClient&) = delete;
    WireClient& operator=(const WireClient&) = delete;

    // Sends one line, returns the reply line without its newline.
    std::string exchange(std::string_view line);
    wire::Message request(const wire::Message& m);

private:
    int fd_ = -1;
    std::string pending_;
};

}  // namespace ractdas
