#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <thread>

#include <httplib.h>

#include "tracecot/lang/samples.hpp"
#include "tracecot/llm/gateway.hpp"
#include "tracecot/runtime/interpreter.hpp"

using namespace tracecot;
using namespace tracecot::llm;
using nlohmann::ordered_json;

namespace {

// Local chat-completion stub. `script` decides each reply from the request body
// and the 1-based hit count.
class StubServer {
 public:
  using Script = std::function<std::pair<int, std::string>(const ordered_json&, int)>;

  explicit StubServer(Script script) : script_(std::move(script)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      int hit = ++hits_;
      last_auth_ = req.get_header_value("Authorization");
      auto [status, body] = script_(ordered_json::parse(req.body), hit);
      res.status = status;
      res.set_content(body, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  int hits() const { return hits_; }
  std::string last_auth() const { return last_auth_; }

 private:
  Script script_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> hits_{0};
  std::string last_auth_;
};

std::string completion_body(const std::string& content, const std::string& finish = "stop") {
  return ordered_json{{"choices", {{{"index", 0},
                                    {"message", {{"role", "assistant"}, {"content", content}}},
                                    {"finish_reason", finish}}}},
                      {"usage", {{"prompt_tokens", 3}, {"completion_tokens", 4}}}}
      .dump();
}

std::string echo(const ordered_json& req) {
  return completion_body(req["messages"].back()["content"].get<std::string>());
}

struct Harness {
  std::vector<ordered_json> logs;
  std::vector<long> sleeps;

  Gateway make(const std::string& endpoint, std::string key = "k", std::string cache_dir = "") {
    GatewayConfig config;
    config.endpoint = endpoint;
    config.api_key = std::move(key);
    config.cache_dir = std::move(cache_dir);
    config.timeout = std::chrono::seconds(5);
    return Gateway(config, nullptr, [this](std::chrono::milliseconds d) { sleeps.push_back(d.count()); },
                   [this](const ordered_json& e) { logs.push_back(e); });
  }
};

ChatRequest simple_request(const std::string& text) {
  ChatRequest r;
  r.model_name = "stub";
  r.messages.push_back({"user", text});
  return r;
}

}  // namespace

TEST(Gateway, EchoStub) {
  StubServer server([](const ordered_json& req, int) { return std::make_pair(200, echo(req)); });
  Harness h;
  Gateway gw = h.make(server.endpoint());
  ChatResponse r = gw.complete(simple_request("hello"));
  EXPECT_EQ(r.content, "hello");
  EXPECT_EQ(r.finish_reason, FinishReason::Stop);
  EXPECT_EQ(r.completion_tokens, 4u);
  EXPECT_EQ(server.last_auth(), "Bearer k");
}

TEST(Gateway, RetriesRateLimitThenSucceeds) {
  StubServer server([](const ordered_json& req, int hit) {
    return hit <= 2 ? std::make_pair(429, std::string("{}")) : std::make_pair(200, echo(req));
  });
  Harness h;
  Gateway gw = h.make(server.endpoint());
  EXPECT_EQ(gw.complete(simple_request("x")).content, "x");
  EXPECT_EQ(server.hits(), 3);
  EXPECT_EQ(h.sleeps, (std::vector<long>{500, 1000}));
  // Each attempt is logged with its backoff, and the summary records the retry count.
  ASSERT_EQ(h.logs.size(), 4u);
  EXPECT_EQ(h.logs[0]["outcome"], "retry");
  EXPECT_EQ(h.logs[0]["backoff_ms"], 500);
  EXPECT_EQ(h.logs[1]["backoff_ms"], 1000);
  EXPECT_EQ(h.logs[3]["retries"], 2);
}

TEST(Gateway, GivesUpAfterCap) {
  StubServer server([](const ordered_json&, int) { return std::make_pair(429, std::string("{}")); });
  Harness h;
  Gateway gw = h.make(server.endpoint());
  EXPECT_THROW(gw.complete(simple_request("x")), RateLimited);
  EXPECT_EQ(server.hits(), 5);
  EXPECT_EQ(h.sleeps, (std::vector<long>{500, 1000, 2000, 4000}));
}

TEST(Gateway, AuthFailureIsNotRetried) {
  StubServer server([](const ordered_json&, int) { return std::make_pair(401, std::string("{}")); });
  Harness h;
  Gateway gw = h.make(server.endpoint(), "bad");
  EXPECT_THROW(gw.complete(simple_request("x")), AuthError);
  EXPECT_EQ(server.hits(), 1);
  EXPECT_TRUE(h.sleeps.empty());
}

TEST(Gateway, ServerErrorsRetriedMalformedNot) {
  StubServer server([](const ordered_json& req, int hit) {
    if (hit == 1) return std::make_pair(503, std::string("busy"));
    if (req["messages"][0]["content"] == "bad") return std::make_pair(200, std::string("not json"));
    return std::make_pair(200, echo(req));
  });
  Harness h;
  Gateway gw = h.make(server.endpoint());
  EXPECT_EQ(gw.complete(simple_request("ok")).content, "ok");
  EXPECT_THROW(gw.complete(simple_request("bad")), MalformedResponse);
  EXPECT_EQ(server.hits(), 3);
}

TEST(Gateway, NetworkErrorAfterRetries) {
  Harness h;
  // Port 1 is privileged and unused, so the connection is refused at once.
  Gateway gw = h.make("http://127.0.0.1:1/v1");
  EXPECT_THROW(gw.complete(simple_request("x")), NetworkError);
  EXPECT_EQ(h.sleeps.size(), 4u);
}

TEST(Gateway, RequestBodyCarriesSamplingAndPassthrough) {
  ordered_json seen;
  StubServer server([&](const ordered_json& req, int) {
    seen = req;
    return std::make_pair(200, echo(req));
  });
  Harness h;
  Gateway gw = h.make(server.endpoint());
  ChatRequest r = simple_request("x");
  r.extra_body = {{"chat_template_kwargs", {{"enable_thinking", true}}}};
  gw.complete(r);
  EXPECT_EQ(seen["temperature"], 0.6);
  EXPECT_EQ(seen["top_p"], 0.95);
  EXPECT_EQ(seen["top_k"], 20);
  EXPECT_EQ(seen["max_tokens"], 16382);
  EXPECT_EQ(seen["chat_template_kwargs"]["enable_thinking"], true);
  EXPECT_EQ(SamplingConfig::evaluation().temperature, 0.0);
}

TEST(Gateway, RefusesUnfilledSlots) {
  Harness h;
  Gateway gw = h.make("http://127.0.0.1:9/v1");
  EXPECT_THROW(gw.complete(simple_request("Question: {question}")), Error);
}

TEST(Gateway, CacheMakesRerunsOffline) {
  auto dir = std::filesystem::temp_directory_path() / "tracecot_gateway_cache_test";
  std::filesystem::remove_all(dir);
  {
    StubServer server([](const ordered_json& req, int) { return std::make_pair(200, echo(req)); });
    Harness h;
    Gateway gw = h.make(server.endpoint(), "k", dir.string());
    EXPECT_FALSE(gw.complete(simple_request("cached")).from_cache);
  }
  Harness h;
  Gateway gw = h.make("http://127.0.0.1:9/v1", "k", dir.string());
  ChatResponse r = gw.complete(simple_request("cached"));
  EXPECT_TRUE(r.from_cache);
  EXPECT_EQ(r.content, "cached");
  std::filesystem::remove_all(dir);
}

TEST(Gateway, BatchKeepsOrder) {
  StubServer server([](const ordered_json& req, int) { return std::make_pair(200, echo(req)); });
  Harness h;
  Gateway gw = h.make(server.endpoint());
  std::vector<ChatRequest> requests;
  for (int i = 0; i < 12; ++i) requests.push_back(simple_request("m" + std::to_string(i)));
  requests.push_back(simple_request("{trace}"));
  auto results = gw.complete_batch(requests);
  ASSERT_EQ(results.size(), 13u);
  for (int i = 0; i < 12; ++i) EXPECT_EQ(results[static_cast<std::size_t>(i)].response->content, "m" + std::to_string(i));
  EXPECT_EQ(results[12].error_code, "unfilled_slot");
}

namespace {

runtime::ExecutionTrace base7_trace() {
  const auto* s = lang::find_sample("base7");
  auto program = lang::parse(s->source, "base7", s->line_offset);
  return runtime::execute(program, runtime::binding_from_json(ordered_json::parse(s->example_input))).trace;
}

}  // namespace

TEST(Translate, GroundedStub) {
  auto trace = base7_trace();
  std::string trace_text = runtime::render_trace(trace);
  ordered_json seen;
  StubServer server([&](const ordered_json& req, int) {
    seen = req;
    return std::make_pair(200, completion_body("<think>hmm</think>\n1. 100 gives 14, then 2.\n"
                                               "2. The pieces give '2', '20' and finally '202'."));
  });
  Harness h;
  Gateway gw = h.make(server.endpoint());
  auto nl = translate(gw, "stub", "Convert to base 7", "{'num': 100}", trace_text, trace);
  EXPECT_EQ(nl.mode, naturalizer::Mode::LlmTranslated);
  EXPECT_EQ(nl.steps.size(), 2u);
  std::string sent = seen["messages"][0]["content"];
  EXPECT_NE(sent.find(trace_text), std::string::npos);
  EXPECT_EQ(sent.find("{question}"), std::string::npos);
}

TEST(Translate, UngroundedAndEmptyRejected) {
  auto trace = base7_trace();
  std::string trace_text = runtime::render_trace(trace);
  StubServer server([&](const ordered_json& req, int) {
    std::string q = req["messages"][0]["content"];
    if (q.find("EMPTY") != std::string::npos) return std::make_pair(200, completion_body("<think>x</think>"));
    return std::make_pair(200, completion_body("1. 100 gives 15.\n2. Answer '202'."));
  });
  Harness h;
  Gateway gw = h.make(server.endpoint());
  try {
    translate(gw, "stub", "q", "{'num': 100}", trace_text, trace);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "ungrounded_translation");
  }
  try {
    translate(gw, "stub", "EMPTY", "{'num': 100}", trace_text, trace);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "empty_after_strip");
  }
}
