#include "tracecot/llm/gateway.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "tracecot/common/hash.hpp"

namespace tracecot::llm {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr std::string_view kSlots[] = {"{question}", "{input}", "{trace}", "{code}"};

std::string env_or(const char* primary, const char* fallback) {
  if (const char* v = std::getenv(primary); v != nullptr && *v != '\0') return v;
  if (const char* v = std::getenv(fallback); v != nullptr && *v != '\0') return v;
  return "";
}

FinishReason parse_finish_reason(const ordered_json& value) {
  if (!value.is_string()) return FinishReason::Error;
  std::string reason = value.get<std::string>();
  if (reason == "stop") return FinishReason::Stop;
  if (reason == "length") return FinishReason::Length;
  return FinishReason::Error;
}

ChatResponse parse_response(const std::string& body) {
  ordered_json json = ordered_json::parse(body, nullptr, false);
  if (json.is_discarded() || !json.is_object()) throw MalformedResponse("response is not a JSON object");
  const auto choices = json.find("choices");
  if (choices == json.end() || !choices->is_array() || choices->empty()) {
    throw MalformedResponse("response has no choices");
  }
  const auto& choice = choices->front();
  const auto message = choice.find("message");
  if (message == choice.end() || !message->is_object()) throw MalformedResponse("choice has no message");
  ChatResponse response;
  if (auto content = message->find("content"); content != message->end() && content->is_string()) {
    response.content = content->get<std::string>();
  } else {
    throw MalformedResponse("message has no text content");
  }
  response.finish_reason =
      parse_finish_reason(choice.contains("finish_reason") ? choice["finish_reason"] : ordered_json());
  if (auto usage = json.find("usage"); usage != json.end() && usage->is_object()) {
    response.prompt_tokens = usage->value("prompt_tokens", std::size_t{0});
    response.completion_tokens = usage->value("completion_tokens", std::size_t{0});
  }
  return response;
}

class HttpTransport : public Transport {
 public:
  HttpTransport(const std::string& endpoint, std::chrono::seconds timeout) : timeout_(timeout) {
    // Split "scheme://host[:port]/base" so paths can be appended to the base.
    std::size_t scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
      throw Error("config_error", "endpoint must start with http:// or https://: " + endpoint);
    }
    std::size_t path_start = endpoint.find('/', scheme_end + 3);
    origin_ = endpoint.substr(0, path_start);
    base_path_ = path_start == std::string::npos ? "" : endpoint.substr(path_start);
    while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  }

  HttpReply post_json(const std::string& path, const std::string& body,
                      const std::map<std::string, std::string>& headers) override;

 private:
  std::string origin_;
  std::string base_path_;
  std::chrono::seconds timeout_;
};

HttpReply HttpTransport::post_json(const std::string& path, const std::string& body,
                                   const std::map<std::string, std::string>& headers) {
  // A client per call keeps concurrent batch requests independent.
  httplib::Client client(origin_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Headers hs(headers.begin(), headers.end());
  HttpReply reply;
  auto result = client.Post(base_path_ + path, hs, body, "application/json");
  if (!result) {
    reply.error = httplib::to_string(result.error());
    return reply;
  }
  reply.status = result->status;
  reply.body = result->body;
  if (result->has_header("Retry-After")) {
    try {
      reply.retry_after = std::chrono::seconds(std::stol(result->get_header_value("Retry-After")));
    } catch (const std::exception&) {
      // HTTP-date form is ignored; the normal schedule applies.
    }
  }
  return reply;
}

}  // namespace

std::string_view to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::Stop: return "stop";
    case FinishReason::Length: return "length";
    case FinishReason::Error: return "error";
  }
  return "error";
}

std::unique_ptr<Transport> make_http_transport(const std::string& endpoint,
                                               std::chrono::seconds timeout) {
  return std::make_unique<HttpTransport>(endpoint, timeout);
}

GatewayConfig GatewayConfig::from_env() {
  GatewayConfig config;
  config.endpoint = env_or("TRACECOT_LLM_ENDPOINT", "OPENAI_BASE_URL");
  config.api_key = env_or("TRACECOT_LLM_API_KEY", "OPENAI_API_KEY");
  return config;
}

Gateway::Gateway(GatewayConfig config, std::unique_ptr<Transport> transport, Sleeper sleeper,
                 LogSink log)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      sleeper_(std::move(sleeper)),
      log_(std::move(log)) {
  if (config_.pool_width == 0) throw Error("config_error", "pool width must be at least 1");
  if (!transport_) {
    if (config_.endpoint.empty()) {
      throw Error("config_error", "no LLM endpoint configured (set TRACECOT_LLM_ENDPOINT)");
    }
    transport_ = make_http_transport(config_.endpoint, config_.timeout);
  }
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (!log_) log_ = [](const ordered_json& entry) { std::clog << entry.dump() << '\n'; };
}

ordered_json Gateway::request_body(const ChatRequest& request) {
  ordered_json messages = ordered_json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  ordered_json body = {{"model", request.model_name},
                       {"messages", messages},
                       {"temperature", request.sampling.temperature},
                       {"top_p", request.sampling.top_p},
                       {"max_tokens", request.sampling.max_tokens}};
  if (request.sampling.top_k) body["top_k"] = *request.sampling.top_k;
  if (request.extra_body.is_object()) {
    for (const auto& [key, value] : request.extra_body.items()) body[key] = value;
  }
  return body;
}

void Gateway::log(ordered_json entry) {
  std::lock_guard<std::mutex> lock(log_mutex_);
  log_(entry);
}

std::chrono::milliseconds Gateway::backoff_for(std::size_t retry, const HttpReply& reply) const {
  auto delay = config_.initial_backoff;
  for (std::size_t i = 0; i < retry && delay < config_.max_backoff; ++i) delay *= 2;
  if (reply.retry_after) delay = std::max(delay, *reply.retry_after);
  return std::min(delay, config_.max_backoff);
}

std::optional<ChatResponse> Gateway::cache_lookup(const std::string& key) const {
  if (config_.cache_dir.empty()) return std::nullopt;
  std::ifstream in(fs::path(config_.cache_dir) / (key + ".json"));
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  ordered_json json = ordered_json::parse(ss.str(), nullptr, false);
  if (json.is_discarded() || !json.contains("content")) return std::nullopt;
  ChatResponse response;
  response.content = json["content"].get<std::string>();
  response.finish_reason = parse_finish_reason(json["finish_reason"]);
  response.prompt_tokens = json.value("prompt_tokens", std::size_t{0});
  response.completion_tokens = json.value("completion_tokens", std::size_t{0});
  response.from_cache = true;
  return response;
}

void Gateway::cache_store(const std::string& key, const ChatResponse& response) const {
  if (config_.cache_dir.empty()) return;
  fs::create_directories(config_.cache_dir);
  fs::path final_path = fs::path(config_.cache_dir) / (key + ".json");
  fs::path tmp = final_path;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp);
    out << ordered_json{{"content", response.content},
                        {"finish_reason", to_string(response.finish_reason)},
                        {"prompt_tokens", response.prompt_tokens},
                        {"completion_tokens", response.completion_tokens}}
               .dump();
  }
  fs::rename(tmp, final_path);
}

ChatResponse Gateway::complete(const ChatRequest& request) {
  if (request.messages.empty()) throw Error("invalid_request", "a request needs at least one message");
  if (!request.sampling.valid()) throw Error("invalid_request", "sampling parameters out of range");
  for (const auto& m : request.messages) {
    for (auto slot : kSlots) {
      if (m.content.find(slot) != std::string::npos) {
        throw Error("unfilled_slot", "message contains template slot " + std::string(slot));
      }
    }
  }

  std::string body = request_body(request).dump();
  std::string key = sha256_hex(body);
  std::string request_id = key.substr(0, 16);
  if (auto cached = cache_lookup(key)) {
    log({{"event", "response"}, {"request_id", request_id}, {"cached", true}, {"retries", 0}});
    return *cached;
  }

  std::map<std::string, std::string> headers;
  if (!config_.api_key.empty()) headers["Authorization"] = "Bearer " + config_.api_key;

  for (std::size_t attempt = 0;; ++attempt) {
    HttpReply reply = transport_->post_json("/chat/completions", body, headers);
    ordered_json entry = {{"event", "attempt"},
                          {"request_id", request_id},
                          {"attempt", attempt + 1},
                          {"status", reply.status}};
    if (!reply.error.empty()) entry["error"] = reply.error;

    if (reply.status == 401 || reply.status == 403) {
      entry["outcome"] = "auth_error";
      log(entry);
      throw AuthError("endpoint rejected the credential (HTTP " + std::to_string(reply.status) + ")");
    }
    bool transient = reply.status == 0 || reply.status == 429 || reply.status >= 500;
    if (!transient) {
      if (reply.status < 200 || reply.status >= 300) {
        entry["outcome"] = "rejected";
        log(entry);
        throw Error("request_rejected", "HTTP " + std::to_string(reply.status) + ": " + reply.body.substr(0, 200));
      }
      ChatResponse response;
      try {
        response = parse_response(reply.body);
      } catch (const MalformedResponse&) {
        entry["outcome"] = "malformed";
        log(entry);
        throw;
      }
      entry["outcome"] = "ok";
      log(entry);
      log({{"event", "response"},
           {"request_id", request_id},
           {"cached", false},
           {"retries", attempt},
           {"finish_reason", to_string(response.finish_reason)}});
      if (response.finish_reason != FinishReason::Error) cache_store(key, response);
      return response;
    }
    if (attempt >= config_.max_retries) {
      entry["outcome"] = "gave_up";
      log(entry);
      if (reply.status == 429) {
        throw RateLimited("still rate limited after " + std::to_string(attempt) + " retries");
      }
      if (reply.status == 0) {
        throw NetworkError(reply.error.empty() ? "no response" : reply.error);
      }
      throw NetworkError("HTTP " + std::to_string(reply.status) + " after " + std::to_string(attempt) +
                         " retries");
    }
    auto delay = backoff_for(attempt, reply);
    entry["outcome"] = "retry";
    entry["backoff_ms"] = delay.count();
    log(entry);
    sleeper_(delay);
  }
}

std::vector<Gateway::BatchItem> Gateway::complete_batch(const std::vector<ChatRequest>& requests) {
  std::vector<BatchItem> results(requests.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        results[i].response = complete(requests[i]);
      } catch (const Error& e) {
        results[i].error_code = e.code();
        results[i].error_detail = e.detail();
      } catch (const std::exception& e) {
        results[i].error_code = "internal_error";
        results[i].error_detail = e.what();
      }
    }
  };
  std::size_t width = std::min(config_.pool_width, requests.size());
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < width; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  return results;
}

naturalizer::NlTrace translate(Gateway& gateway, const std::string& model_name,
                               std::string_view question, std::string_view input_repr,
                               std::string_view trace_text, const runtime::ExecutionTrace& trace,
                               const SamplingConfig& sampling, const ordered_json& extra_body) {
  naturalizer::TranslationPrompt prompt =
      naturalizer::build_translation_prompt(question, input_repr, trace_text);
  ChatRequest request;
  request.model_name = model_name;
  if (!prompt.system_text.empty()) request.messages.push_back({"system", prompt.system_text});
  request.messages.push_back({"user", prompt.user_text});
  request.sampling = sampling;
  request.extra_body = extra_body;
  ChatResponse response = gateway.complete(request);
  return naturalizer::ingest_llm_translation(response.content, trace, input_repr, question);
}

}  // namespace tracecot::llm
