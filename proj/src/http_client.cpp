#include "asa/http_client.hpp"

#include <httplib.h>

#include "asa/common.hpp"

namespace asa {

Endpoint parse_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint '" + url + "' lacks a scheme");
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http") throw ConfigError("endpoint '" + url + "': only http:// is supported");
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.base = url.substr(0, path_start);
  e.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (e.base.size() <= scheme_end + 3) throw ConfigError("endpoint '" + url + "' lacks a host");
  return e;
}

nlohmann::json post_json(const std::string& url, const nlohmann::json& body, int timeout_s) {
  const Endpoint e = parse_endpoint(url);
  httplib::Client client(e.base);
  client.set_connection_timeout(timeout_s, 0);
  client.set_read_timeout(timeout_s, 0);
  auto res = client.Post(e.path, body.dump(), "application/json");
  if (!res) throw TransportError("POST " + url + " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw TransportError("POST " + url + " returned HTTP " + std::to_string(res->status));
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& ex) {
    throw TransportError("POST " + url + " returned malformed JSON: " + ex.what());
  }
}

}  // namespace asa
