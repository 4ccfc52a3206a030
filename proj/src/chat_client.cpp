#include "beyondwords/chat_client.hpp"

#include <filesystem>

#include "beyondwords/errors.hpp"
#include "beyondwords/matrix_io.hpp"

namespace beyondwords {

using json = nlohmann::json;

void ChatClientSpec::validate() const {
  if (kind == ChatKind::http) {
    if (!endpoint || endpoint->empty() || !model_id || model_id->empty()) {
      throw ConfigError("http chat client requires endpoint and model_id");
    }
    parse_endpoint(*endpoint);
  } else if (script.empty()) {
    throw ConfigError("scripted chat client requires a non-empty script");
  }
  if (!(temperature >= 0)) throw ConfigError("chat temperature must be >= 0");
  if (max_retries < 0) throw ConfigError("chat max_retries must be >= 0");
  if (initial_backoff_ms < 0) throw ConfigError("chat initial_backoff_ms must be >= 0");
}

json to_json(const ChatClientSpec& s) {
  json j{{"kind", s.kind == ChatKind::http ? "http" : "scripted"},
         {"temperature", s.temperature},
         {"max_retries", s.max_retries}};
  if (s.kind == ChatKind::http) {
    j["endpoint"] = s.endpoint.value_or("");
    j["model_id"] = s.model_id.value_or("");
    j["initial_backoff_ms"] = s.initial_backoff_ms;
    j["timeout_seconds"] = s.timeout_seconds;
    j["api_key_env"] = s.api_key_env;
  } else {
    j["script"] = s.script;
  }
  return j;
}

ChatClientSpec chat_spec_from_json(const json& j, const std::string& base_dir) {
  ChatClientSpec s;
  const std::string kind = j.value("kind", "scripted");
  if (kind == "http") {
    s.kind = ChatKind::http;
  } else if (kind == "scripted") {
    s.kind = ChatKind::scripted;
  } else {
    throw ConfigError("unknown chat client kind \"" + kind + "\"");
  }
  if (j.contains("endpoint")) s.endpoint = j["endpoint"].get<std::string>();
  if (j.contains("model_id")) s.model_id = j["model_id"].get<std::string>();
  s.temperature = j.value("temperature", s.temperature);
  s.max_retries = j.value("max_retries", s.max_retries);
  s.initial_backoff_ms = j.value("initial_backoff_ms", s.initial_backoff_ms);
  s.timeout_seconds = j.value("timeout_seconds", s.timeout_seconds);
  s.api_key_env = j.value("api_key_env", s.api_key_env);
  if (j.contains("script")) s.script = j["script"].get<std::vector<std::string>>();
  if (j.contains("script_file")) {
    std::filesystem::path file = j["script_file"].get<std::string>();
    if (file.is_relative() && !base_dir.empty()) file = std::filesystem::path(base_dir) / file;
    if (!std::filesystem::exists(file)) throw ConfigError("script file not found: " + file.string());
    s.script = read_json(file).get<std::vector<std::string>>();
  }
  s.validate();
  return s;
}

json ChatUsage::to_json() const {
  return {{"requests", requests.load()},
          {"retries", retries.load()},
          {"prompt_chars", prompt_chars.load()},
          {"reply_chars", reply_chars.load()}};
}

namespace {

void count(ChatUsage* usage, const std::vector<ChatMessage>& messages, const std::string& reply,
           int retries) {
  if (!usage) return;
  long chars = 0;
  for (const auto& m : messages) chars += static_cast<long>(m.content.size());
  usage->requests += 1;
  usage->retries += retries;
  usage->prompt_chars += chars;
  usage->reply_chars += static_cast<long>(reply.size());
}

}  // namespace

ScriptedChatClient::ScriptedChatClient(std::vector<std::string> script, ChatUsage* usage)
    : script_(std::move(script)), usage_(usage) {}

std::string ScriptedChatClient::complete(const std::vector<ChatMessage>& messages) {
  requests_.push_back(messages);
  if (next_ >= script_.size()) {
    throw ServiceError("scripted chat client ran out of replies after " +
                       std::to_string(script_.size()));
  }
  const std::string& reply = script_[next_++];
  count(usage_, messages, reply, 0);
  return reply;
}

HttpChatClient::HttpChatClient(ChatClientSpec spec, RateLimiter* limiter, ChatUsage* usage)
    : spec_(std::move(spec)), limiter_(limiter), usage_(usage) {
  spec_.validate();
}

std::string HttpChatClient::complete(const std::vector<ChatMessage>& messages) {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  const json payload{{"model", *spec_.model_id}, {"temperature", spec_.temperature}, {"messages", msgs}};
  RetryPolicy policy;
  policy.max_retries = spec_.max_retries;
  policy.initial_backoff = std::chrono::milliseconds(spec_.initial_backoff_ms);
  policy.timeout_seconds = spec_.timeout_seconds;
  const HttpResult res = post_json(*spec_.endpoint, payload, env_or_empty(spec_.api_key_env), policy, limiter_);
  retries_ += res.retries;
  try {
    const std::string reply = res.body.at("choices").at(0).at("message").at("content").get<std::string>();
    count(usage_, messages, reply, res.retries);
    return reply;
  } catch (const json::exception& e) {
    throw ServiceError(*spec_.endpoint + ": malformed chat reply: " + e.what());
  }
}

std::unique_ptr<ChatClient> make_chat_client(const ChatClientSpec& spec, RateLimiter* limiter,
                                             ChatUsage* usage) {
  spec.validate();
  if (spec.kind == ChatKind::http) return std::make_unique<HttpChatClient>(spec, limiter, usage);
  return std::make_unique<ScriptedChatClient>(spec.script, usage);
}

}  // namespace beyondwords
