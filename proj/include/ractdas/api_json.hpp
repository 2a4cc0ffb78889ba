#pragma once

// JSON bodies of the HTTP API, shared by the server and the client.
// Timestamps are integer nanoseconds.

#include "json.hpp"
#include "ractdas/registry.hpp"

namespace ractdas::api {

using nlohmann::json;

json to_json(const UserAccount& u);   // no password material
json to_json(const TagRecord& t);
json to_json(const TheftReport& r);
json to_json(const RegistryEvent& e);
json to_json(const std::string& checkpost_id, const GateView& g);
json to_json(const Session& s);

UserAccount user_from(const json& j);
TagRecord tag_from(const json& j);
TheftReport report_from(const json& j);
RegistryEvent event_from(const json& j);
GateView gate_from(const json& j);
Session session_from(const json& j);

Role role_from(const std::string& s);   // throws Error(MalformedMessage)

}  // namespace ractdas::api
