#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracecot/common/error.hpp"
#include "tracecot/naturalizer/naturalizer.hpp"
#include "tracecot/runtime/trace.hpp"

namespace tracecot::llm {

struct SamplingConfig {
  double temperature = 0.6;
  double top_p = 0.95;
  std::optional<int> top_k = 20;
  int max_tokens = 16382;

  static SamplingConfig translation() { return {}; }
  static SamplingConfig evaluation() {
    SamplingConfig s;
    s.temperature = 0.0;
    return s;
  }
  bool valid() const {
    return temperature >= 0.0 && top_p > 0.0 && top_p <= 1.0 && (!top_k || *top_k > 0) &&
           max_tokens > 0;
  }
};

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model_name;
  std::vector<ChatMessage> messages;
  SamplingConfig sampling;
  // Merged into the request body as-is, e.g. {"chat_template_kwargs": {"enable_thinking": true}}.
  nlohmann::ordered_json extra_body = nlohmann::ordered_json::object();
};

enum class FinishReason { Stop, Length, Error };

std::string_view to_string(FinishReason reason);

struct ChatResponse {
  std::string content;
  FinishReason finish_reason = FinishReason::Stop;
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
  bool from_cache = false;
};

class NetworkError : public Error {
 public:
  explicit NetworkError(const std::string& detail) : Error("network_error", detail) {}
};
class RateLimited : public Error {
 public:
  explicit RateLimited(const std::string& detail) : Error("rate_limited", detail) {}
};
class AuthError : public Error {
 public:
  explicit AuthError(const std::string& detail) : Error("auth_error", detail) {}
};
class MalformedResponse : public Error {
 public:
  explicit MalformedResponse(const std::string& detail) : Error("malformed_response", detail) {}
};

struct HttpReply {
  int status = 0;  // 0 when the request never got a response
  std::string body;
  std::string error;
  std::optional<std::chrono::milliseconds> retry_after;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpReply post_json(const std::string& path, const std::string& body,
                              const std::map<std::string, std::string>& headers) = 0;
};

// `endpoint` is a base URL such as "http://localhost:8000/v1".
std::unique_ptr<Transport> make_http_transport(const std::string& endpoint,
                                               std::chrono::seconds timeout);

struct GatewayConfig {
  std::string endpoint;
  std::string api_key;
  std::size_t max_retries = 4;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{8000};
  std::chrono::seconds timeout{300};
  std::string cache_dir;  // empty disables the cache
  std::size_t pool_width = 4;

  // TRACECOT_LLM_ENDPOINT / TRACECOT_LLM_API_KEY, falling back to
  // OPENAI_BASE_URL / OPENAI_API_KEY.
  static GatewayConfig from_env();
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;
using LogSink = std::function<void(const nlohmann::ordered_json&)>;

// Chat-completion client. Retries 429, 5xx and transport failures with
// exponential backoff; 401/403 fail at once. Every attempt is logged.
class Gateway {
 public:
  explicit Gateway(GatewayConfig config, std::unique_ptr<Transport> transport = nullptr,
                   Sleeper sleeper = nullptr, LogSink log = nullptr);

  ChatResponse complete(const ChatRequest& request);

  struct BatchItem {
    std::optional<ChatResponse> response;
    std::string error_code;
    std::string error_detail;
  };
  // At most pool_width requests in flight; results keep the input order.
  std::vector<BatchItem> complete_batch(const std::vector<ChatRequest>& requests);

  const GatewayConfig& config() const { return config_; }

  static nlohmann::ordered_json request_body(const ChatRequest& request);

 private:
  std::chrono::milliseconds backoff_for(std::size_t retry, const HttpReply& reply) const;
  void log(nlohmann::ordered_json entry);
  std::optional<ChatResponse> cache_lookup(const std::string& key) const;
  void cache_store(const std::string& key, const ChatResponse& response) const;

  GatewayConfig config_;
  std::unique_ptr<Transport> transport_;
  Sleeper sleeper_;
  LogSink log_;
  std::mutex log_mutex_;
};

// Builds the translation prompt, sends it with the translation sampling
// defaults and ingests the answer.
naturalizer::NlTrace translate(Gateway& gateway, const std::string& model_name,
                               std::string_view question, std::string_view input_repr,
                               std::string_view trace_text, const runtime::ExecutionTrace& trace,
                               const SamplingConfig& sampling = SamplingConfig::translation(),
                               const nlohmann::ordered_json& extra_body = nlohmann::ordered_json::object());

}  // namespace tracecot::llm
