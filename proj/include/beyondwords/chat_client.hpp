#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "beyondwords/http.hpp"

namespace beyondwords {

enum class ChatKind { http, scripted };

struct ChatClientSpec {
  ChatKind kind = ChatKind::scripted;
  std::optional<std::string> endpoint;
  std::optional<std::string> model_id;
  double temperature = 0.0;
  int max_retries = 3;
  int initial_backoff_ms = 500;
  double timeout_seconds = 120.0;
  std::string api_key_env = "BEYONDWORDS_API_KEY";
  // Replies returned in order by a scripted client.
  std::vector<std::string> script;

  void validate() const;
};

nlohmann::json to_json(const ChatClientSpec& s);
/// Accepts either an inline "script" array or a "script_file" holding a JSON
/// array of strings; relative script paths resolve against `base_dir`.
ChatClientSpec chat_spec_from_json(const nlohmann::json& j, const std::string& base_dir = "");

struct ChatMessage {
  std::string role;  // "system" or "user" (or "assistant" in re-asks)
  std::string content;
};

/// Per-run request counter shared by every client of a run.
struct ChatUsage {
  std::atomic<long> requests{0};
  std::atomic<long> retries{0};
  std::atomic<long> prompt_chars{0};
  std::atomic<long> reply_chars{0};

  nlohmann::json to_json() const;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  /// Sends one conversation and returns the assistant's text.
  virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
  /// Retries spent so far across all calls.
  int retries() const { return retries_; }

 protected:
  int retries_ = 0;
};

/// Replays a fixed list of replies and records every request it receives.
class ScriptedChatClient : public ChatClient {
 public:
  explicit ScriptedChatClient(std::vector<std::string> script, ChatUsage* usage = nullptr);
  std::string complete(const std::vector<ChatMessage>& messages) override;
  const std::vector<std::vector<ChatMessage>>& requests() const { return requests_; }

 private:
  std::vector<std::string> script_;
  std::size_t next_ = 0;
  std::vector<std::vector<ChatMessage>> requests_;
  ChatUsage* usage_;
};

/// OpenAI-style chat completions over HTTP(S).
class HttpChatClient : public ChatClient {
 public:
  HttpChatClient(ChatClientSpec spec, RateLimiter* limiter = nullptr, ChatUsage* usage = nullptr);
  std::string complete(const std::vector<ChatMessage>& messages) override;

 private:
  ChatClientSpec spec_;
  RateLimiter* limiter_;
  ChatUsage* usage_;
};

std::unique_ptr<ChatClient> make_chat_client(const ChatClientSpec& spec, RateLimiter* limiter = nullptr,
                                             ChatUsage* usage = nullptr);

}  // namespace beyondwords
