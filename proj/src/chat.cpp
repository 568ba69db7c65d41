#include "spanbench/chat.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "spanbench/errors.hpp"

namespace spanbench {

std::string to_string(ChatProviderConfig::Kind kind) {
  return kind == ChatProviderConfig::Kind::scripted ? "scripted"
                                                    : "http_openai_compatible";
}

ChatProviderConfig::Kind chat_kind_from_string(const std::string& s) {
  if (s == "http_openai_compatible") return ChatProviderConfig::Kind::http_openai_compatible;
  if (s == "scripted") return ChatProviderConfig::Kind::scripted;
  throw ConfigError("unknown chat provider kind \"" + s + "\"");
}

ScriptedChatProvider::ScriptedChatProvider(std::vector<std::string> responses,
                                           std::string model_name)
    : responses_(std::move(responses)), model_name_(std::move(model_name)) {}

std::string ScriptedChatProvider::complete(const std::vector<ChatMessage>&,
                                           std::optional<std::int64_t>) {
  if (next_ >= responses_.size()) {
    throw ProviderError(0, "scripted chat provider exhausted after " +
                               std::to_string(responses_.size()) + " responses");
  }
  return responses_[next_++];
}

namespace {

class HttpChatProvider : public ChatProvider {
public:
  explicit HttpChatProvider(ChatProviderConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) {
      throw ConfigError("http chat provider requires an endpoint");
    }
    if (config_.temperature < 0.0) throw ConfigError("temperature must be >= 0");
  }

  std::string complete(const std::vector<ChatMessage>& messages,
                       std::optional<std::int64_t> seed) override {
    nlohmann::json body;
    body["model"] = config_.model_name;
    body["messages"] = nlohmann::json::array();
    for (const auto& m : messages) {
      body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    }
    body["temperature"] = config_.temperature;
    body["max_tokens"] = config_.max_output_tokens;
    if (seed) body["seed"] = *seed;

    const std::string response = post_with_retry("/v1/chat/completions", body.dump());
    try {
      auto j = nlohmann::json::parse(response);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ProviderError(200, std::string("bad chat response shape: ") + e.what());
    }
  }

  std::string model_label() const override { return config_.model_name; }

private:
  std::string post_with_retry(const std::string& path, const std::string& body) {
    std::string last_error = "no attempt made";
    int last_status = 0;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(
            static_cast<long>(config_.retry_backoff_ms) << (attempt - 1)));
      }
      httplib::Client client(config_.endpoint);
      client.set_connection_timeout(0, config_.timeout_ms * 1000L);
      client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
      httplib::Headers headers;
      if (!config_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + config_.api_key);
      }
      auto res = client.Post(path, headers, body, "application/json");
      if (!res) {
        last_error = "connection to " + config_.endpoint + " failed: " +
                     httplib::to_string(res.error());
        last_status = -1;
        continue;
      }
      if (res->status == 200) return res->body;
      last_status = res->status;
      last_error = res->body.substr(0, 200);
      if (res->status != 429 && res->status < 500) break;
    }
    if (last_status == -1) throw ProviderUnreachable(last_error);
    throw ProviderError(last_status, "chat endpoint returned " +
                                         std::to_string(last_status) + ": " + last_error);
  }

  ChatProviderConfig config_;
};

}  // namespace

std::unique_ptr<ChatProvider> make_chat_provider(const ChatProviderConfig& config) {
  if (config.kind == ChatProviderConfig::Kind::scripted) {
    return std::make_unique<ScriptedChatProvider>(
        config.script, config.model_name.empty() ? "scripted" : config.model_name);
  }
  return std::make_unique<HttpChatProvider>(config);
}

}  // namespace spanbench
