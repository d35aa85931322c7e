#include "cotemb/http_backend.hpp"

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

namespace cotemb {

HttpChatBackend::HttpChatBackend(std::string base_url, std::string path, BackendConfig config)
    : base_url_(std::move(base_url)), path_(std::move(path)), config_(std::move(config)) {
  if (!config_.credentials_env.empty()) {
    const char* key = std::getenv(config_.credentials_env.c_str());
    if (!key || !*key) {
      throw AuthError("credentials environment variable " + config_.credentials_env +
                      " is not set");
    }
    api_key_ = key;
  }
}

std::string HttpChatBackend::complete_once(const PromptText& prompt) {
  httplib::Client client(base_url_);
  client.set_read_timeout(std::chrono::duration<double>(config_.request_timeout_s));
  client.set_connection_timeout(std::chrono::duration<double>(config_.request_timeout_s));

  nlohmann::json body;
  body["model"] = config_.model_name;
  body["temperature"] = config_.temperature;
  body["max_tokens"] = config_.max_tokens;
  body["messages"] = {{{"role", "user"}, {"content", prompt.text}}};

  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    throw TransportError("request to " + base_url_ + " failed: " +
                         httplib::to_string(res.error()));
  }
  if (res->status == 401 || res->status == 403) {
    throw AuthError("backend rejected credentials (HTTP " + std::to_string(res->status) + ")");
  }
  if (res->status != 200) {
    throw TransportError("backend returned HTTP " + std::to_string(res->status));
  }
  try {
    auto doc = nlohmann::json::parse(res->body);
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("malformed completion payload: ") + e.what());
  }
}

}  // namespace cotemb
