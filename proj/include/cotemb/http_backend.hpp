#pragma once

#include <string>

#include "cotemb/llm_gateway.hpp"

namespace cotemb {

/// Chat-completions backend speaking the common OpenAI-style JSON protocol.
/// The API key is read from the environment variable named in the config;
/// it is never accepted on the command line.
class HttpChatBackend : public CompletionBackend {
 public:
  HttpChatBackend(std::string base_url, std::string path, BackendConfig config);

  std::string complete_once(const PromptText& prompt) override;

 private:
  std::string base_url_;
  std::string path_;
  BackendConfig config_;
  std::string api_key_;
};

}  // namespace cotemb
