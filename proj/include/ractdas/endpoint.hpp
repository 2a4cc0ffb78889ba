#pragma once

// How a running world reaches the registry: in-process calls or a real
// service over HTTP + the line protocol. The world drives both the same
// way, so the trace does not depend on which one is plugged in.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ractdas/client.hpp"
#include "ractdas/registry.hpp"
#include "ractdas/scenario.hpp"
#include "ractdas/wire.hpp"

namespace ractdas {

class RegistryEndpoint {
public:
    virtual ~RegistryEndpoint() = default;

    // Simulated time of the next call.
    virtual void set_time(SimTime t) = 0;
    // One protocol line from a check-post; returns the reply line.
    virtual std::string exchange(const std::string& checkpost_id, const std::string& line) = 0;
    // Throws Error with the registry's code when the action is refused.
    virtual void apply(const ScheduledAction& action) = 0;
    // Check-posts released since the previous call, in release order.
    virtual std::vector<std::string> poll_releases() = 0;
    // Creates the scenario's owner accounts and tags. Existing ones are kept.
    virtual void seed_owners(const std::vector<OwnerSpec>& owners) = 0;
};

// Owns a Registry whose clock is the simulated time. A "sim-operator"
// account carries out scheduled actions.
class LocalEndpoint : public RegistryEndpoint {
public:
    explicit LocalEndpoint(RegistryConfig config = {}, RegistryState initial = {});

    void set_time(SimTime t) override { *now_ = t; }
    std::string exchange(const std::string& checkpost_id, const std::string& line) override;
    void apply(const ScheduledAction& action) override;
    std::vector<std::string> poll_releases() override;
    void seed_owners(const std::vector<OwnerSpec>& owners) override;

    Registry& registry() noexcept { return *registry_; }

private:
    std::shared_ptr<SimTime> now_;
    std::unique_ptr<Registry> registry_;
    std::map<std::string, wire::Session> sessions_;
    std::string operator_login_;
    std::string operator_password_;
    std::uint64_t release_cursor_ = 0;

    const std::string& token();
    std::string token_;
};

struct RemoteOptions {
    Address http;
    Address wire;
    std::string operator_login;
    std::string operator_password;
};

class RemoteEndpoint : public RegistryEndpoint {
public:
    explicit RemoteEndpoint(RemoteOptions options);

    void set_time(SimTime) override {}
    std::string exchange(const std::string& checkpost_id, const std::string& line) override;
    void apply(const ScheduledAction& action) override;
    std::vector<std::string> poll_releases() override;
    void seed_owners(const std::vector<OwnerSpec>& owners) override;

private:
    RemoteOptions options_;
    HttpClient http_;
    std::map<std::string, std::unique_ptr<WireClient>> wires_;
    std::uint64_t release_cursor_ = 0;
};

}  // namespace ractdas
