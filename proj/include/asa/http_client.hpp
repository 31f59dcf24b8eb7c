#pragma once

#include <string>

#include <json.hpp>

namespace asa {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;  // request path, "/" when absent
};

/// Splits "http://host:port/path" into origin and path. Throws ConfigError.
Endpoint parse_endpoint(const std::string& url);

/// POSTs a JSON body and parses the JSON reply. Connection failures and
/// non-2xx replies raise TransportError.
nlohmann::json post_json(const std::string& url, const nlohmann::json& body, int timeout_s = 60);

}  // namespace asa
