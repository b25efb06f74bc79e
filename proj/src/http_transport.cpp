#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "vecont/extraction.hpp"

namespace vecont {

HttpChatTransport::HttpChatTransport(std::string endpoint, std::string api_key, double timeout_seconds)
    : api_key_(std::move(api_key)), timeout_(timeout_seconds) {
  // Split "scheme://host[:port]/path" into the client base and request path.
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorCode::ConfigError, "endpoint must include a scheme: " + endpoint);
  const auto path_start = endpoint.find('/', scheme_end + 3);
  base_ = endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : endpoint.substr(path_start);
}

std::string HttpChatTransport::complete(const ChatRequest& request) {
  httplib::Client client(base_);
  const auto secs = static_cast<time_t>(timeout_);
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);
  client.set_write_timeout(secs, 0);

  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  const nlohmann::json body = {
      {"model", request.model},
      {"temperature", request.temperature},
      {"messages",
       {{{"role", "system"}, {"content", request.system}}, {{"role", "user"}, {"content", request.user}}}}};

  const auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) throw Error(ErrorCode::NetworkError, httplib::to_string(res.error()));
  if (res->status != 200)
    throw Error(ErrorCode::NetworkError, "HTTP " + std::to_string(res->status) + ": " +
                                             res->body.substr(0, 200));
  const auto reply = nlohmann::json::parse(res->body, nullptr, false);
  if (reply.is_discarded()) throw Error(ErrorCode::NetworkError, "response body is not JSON");
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::NetworkError, std::string("unexpected response shape: ") + e.what());
  }
}

}  // namespace vecont
