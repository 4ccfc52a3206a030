#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <string>

#include "json.hpp"

namespace beyondwords {

struct Endpoint {
  std::string scheme_host_port;  // "http://host:port"
  std::string path;              // "/v1/embeddings"
};

/// Splits an absolute http(s) URL. Throws ConfigError on anything else.
Endpoint parse_endpoint(const std::string& url);

/// Minimum spacing between request starts, shared by every client holding
/// the same instance.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_second);
  void acquire();

 private:
  std::mutex mu_;
  std::chrono::steady_clock::duration interval_{};
  std::chrono::steady_clock::time_point next_{};
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  double timeout_seconds = 60.0;
};

struct HttpResult {
  nlohmann::json body;
  int retries = 0;
};

/// POSTs `payload` as JSON and parses the JSON reply. Retries connection
/// failures, 429 and 5xx with exponential backoff; other statuses fail at
/// once. Throws ServiceError when retries are exhausted.
HttpResult post_json(const std::string& url, const nlohmann::json& payload,
                     const std::string& bearer_token, const RetryPolicy& policy,
                     RateLimiter* limiter = nullptr);

/// Value of the named environment variable, or empty.
std::string env_or_empty(const std::string& name);

}  // namespace beyondwords
