#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace spanbench {

struct ChatProviderConfig {
  enum class Kind { http_openai_compatible, scripted };
  Kind kind = Kind::http_openai_compatible;
  std::string endpoint;
  std::string model_name;
  double temperature = 0.0;
  int max_output_tokens = 4096;
  int timeout_ms = 120000;
  int max_retries = 3;
  int retry_backoff_ms = 250;
  std::string api_key;
  std::vector<std::string> script;  // scripted kind: canned assistant replies
};

std::string to_string(ChatProviderConfig::Kind kind);
ChatProviderConfig::Kind chat_kind_from_string(const std::string& s);

struct ChatMessage {
  std::string role;  // "system" | "user"
  std::string content;
};

// Returns the assistant message content for one completion request. Throws
// ProviderUnreachable / ProviderError.
class ChatProvider {
public:
  virtual ~ChatProvider() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages,
                               std::optional<std::int64_t> seed = std::nullopt) = 0;
  virtual std::string model_label() const = 0;
};

// Replays canned responses in order; exhausting the script is a provider
// error so tests fail loudly instead of looping.
class ScriptedChatProvider : public ChatProvider {
public:
  explicit ScriptedChatProvider(std::vector<std::string> responses,
                                std::string model_name = "scripted");
  std::string complete(const std::vector<ChatMessage>& messages,
                       std::optional<std::int64_t> seed) override;
  std::string model_label() const override { return model_name_; }
  std::size_t calls() const { return next_; }

private:
  std::vector<std::string> responses_;
  std::string model_name_;
  std::size_t next_ = 0;
};

std::unique_ptr<ChatProvider> make_chat_provider(const ChatProviderConfig& config);

}  // namespace spanbench
