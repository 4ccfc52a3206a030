#include "beyondwords/http.hpp"

#include <cstdlib>
#include <thread>

#include "httplib.h"

#include "beyondwords/errors.hpp"

namespace beyondwords {

Endpoint parse_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint is not an absolute URL: " + url);
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError("unsupported endpoint scheme: " + scheme);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.scheme_host_port = url.substr(0, path_start);
  ep.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  return ep;
}

RateLimiter::RateLimiter(double requests_per_second) {
  if (requests_per_second > 0) {
    interval_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / requests_per_second));
  }
}

void RateLimiter::acquire() {
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

std::string env_or_empty(const std::string& name) {
  if (name.empty()) return {};
  const char* v = std::getenv(name.c_str());
  return v ? std::string(v) : std::string();
}

namespace {

void apply_proxy(httplib::Client& cli) {
  const std::string proxy = env_or_empty("BEYONDWORDS_PROXY");
  if (proxy.empty()) return;
  const Endpoint ep = parse_endpoint(proxy);
  const auto host_start = ep.scheme_host_port.find("://") + 3;
  const std::string host_port = ep.scheme_host_port.substr(host_start);
  const auto colon = host_port.rfind(':');
  if (colon == std::string::npos) {
    cli.set_proxy(host_port, 80);
  } else {
    cli.set_proxy(host_port.substr(0, colon), std::stoi(host_port.substr(colon + 1)));
  }
}

}  // namespace

HttpResult post_json(const std::string& url, const nlohmann::json& payload,
                     const std::string& bearer_token, const RetryPolicy& policy,
                     RateLimiter* limiter) {
  const Endpoint ep = parse_endpoint(url);
  httplib::Client cli(ep.scheme_host_port);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(policy.timeout_seconds));
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);
  apply_proxy(cli);

  httplib::Headers headers;
  if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);
  const std::string body = payload.dump();

  std::string last_error;
  auto backoff = policy.initial_backoff;
  for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    if (limiter) limiter->acquire();
    auto res = cli.Post(ep.path, headers, body, "application/json");
    if (!res) {
      last_error = "connection error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw ServiceError(url + ": HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    try {
      return HttpResult{nlohmann::json::parse(res->body), attempt};
    } catch (const nlohmann::json::parse_error& e) {
      throw ServiceError(url + ": reply is not JSON: " + e.what());
    }
  }
  throw ServiceError(url + ": giving up after " + std::to_string(policy.max_retries) +
                     " retries (" + last_error + ")");
}

}  // namespace beyondwords
