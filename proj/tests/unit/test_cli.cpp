#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "tracecot/cli/cli.hpp"
#include "tracecot/lang/samples.hpp"
#include "tracecot/naturalizer/naturalizer.hpp"
#include "tracecot/runtime/interpreter.hpp"

using namespace tracecot;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "tracecot");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = cli::run_command(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("tracecot_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Writes the bundled samples as a corpus, plus one extra instance.
fs::path sample_corpus(const fs::path& root) {
  fs::path corpus = root / "mini";
  for (const auto& s : lang::sample_programs()) {
    fs::path d = corpus / std::string(s.name);
    spit(d / "question.txt", std::string(s.question));
    spit(d / "solution.py", std::string(s.source));
    spit(d / "inputs.jsonl", std::string(s.example_input) + "\n");
    if (s.line_offset) spit(d / "meta.json", "{\"line_offset\": " + std::to_string(s.line_offset) + "}");
  }
  spit(corpus / "square" / "question.txt", "What is the square of x?");
  spit(corpus / "square" / "solution.py", "def main_solution(x):\n    y = x * x\n    return y\n");
  spit(corpus / "square" / "inputs.jsonl", "{\"x\": 12}\n{\"x\": -3}\n");
  return corpus;
}

class ClearGatewayEnv : public ::testing::Test {
 protected:
  void SetUp() override {
    for (const char* name : {"TRACECOT_LLM_ENDPOINT", "TRACECOT_LLM_API_KEY", "OPENAI_BASE_URL", "OPENAI_API_KEY"}) {
      unsetenv(name);
    }
  }
};

}  // namespace

TEST(Cli, TraceMatchesGolden) {
  auto r = run({"trace", "--program", "base7", "--input", R"({"num": 100})"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, slurp(fs::path(TRACECOT_TEST_DATA) / "golden" / "base7_num100.trace"));
  EXPECT_TRUE(r.err.empty());
}

TEST(Cli, TraceUsesExampleInputWhenNoneGiven) {
  auto r = run({"trace", "--program", "josephus"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("<<< Return value from main_solution: 11\n"), std::string::npos);
}

TEST(Cli, TraceOfFailingRunExitsOne) {
  fs::path dir = scratch("fail");
  spit(dir / "div.py", "def main_solution(x):\n    return 10 // x\n");
  auto r = run({"trace", "--program", (dir / "div.py").string(), "--input", R"({"x": 0})"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("!!! RuntimeError: ZeroDivisionError"), std::string::npos);
  EXPECT_EQ(r.err, "error: execution_failed: run did not complete\n");
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"trace"}).code, 2);
  EXPECT_EQ(run({"trace", "--program", "base7", "--bogus"}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  auto r = run({"trace", "--program", "no_such_program"});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("error: program_not_found: ", 0), 0u);
  EXPECT_EQ(run({"trace", "--program", "base7", "--input", "[1]"}).code, 2);
}

TEST(Cli, ErrorsAreOneLine) {
  for (auto args : std::vector<std::vector<std::string>>{
           {}, {"trace", "--program", "nope"}, {"build", "--corpus", "/nonexistent/x", "--out", "/tmp"}}) {
    auto r = run(args);
    ASSERT_FALSE(r.err.empty());
    EXPECT_EQ(r.err.find('\n'), r.err.size() - 1) << r.err;
    EXPECT_EQ(r.err.rfind("error: ", 0), 0u);
  }
}

TEST(Cli, HelpExitsZero) {
  auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("build"), std::string::npos);
}

TEST(Cli, ConfigErrorsExitThree) {
  fs::path dir = scratch("config");
  EXPECT_EQ(run({"--config", (dir / "missing.json").string(), "trace", "--program", "base7"}).code, 3);

  spit(dir / "typo.json", R"({"filter": {"max_trace_lines": 10}})");
  auto typo = run({"--config", (dir / "typo.json").string(), "trace", "--program", "base7"});
  EXPECT_EQ(typo.code, 3);
  EXPECT_NE(typo.err.find("config.filter"), std::string::npos);

  spit(dir / "zero.json", R"({"workers": 0})");
  EXPECT_EQ(run({"--config", (dir / "zero.json").string(), "trace", "--program", "base7"}).code, 3);

  spit(dir / "broken.json", "{not json");
  EXPECT_EQ(run({"--config", (dir / "broken.json").string(), "trace", "--program", "base7"}).code, 3);

  EXPECT_EQ(run({"build", "--corpus", dir.string(), "--out", dir.string(), "--variant", "nope"}).code, 3);
  EXPECT_EQ(run({"build", "--corpus", dir.string(), "--out", dir.string(), "--mode", "nope"}).code, 3);
}

TEST(Cli, EmptyCorpusFails) {
  fs::path dir = scratch("empty");
  fs::create_directories(dir / "corpus");
  auto r = run({"build", "--corpus", (dir / "corpus").string(), "--out", (dir / "out").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error: empty_corpus: ", 0), 0u) << r.err;
}

TEST(Cli, BuildWritesDatasetManifestAndReport) {
  fs::path dir = scratch("build");
  fs::path corpus = sample_corpus(dir);
  auto r = run({"build", "--corpus", corpus.string(), "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto summary = ordered_json::parse(r.out);
  EXPECT_EQ(summary["emitted"], 5);
  EXPECT_TRUE(fs::exists(dir / "out" / "mini.ours.jsonl"));
  EXPECT_TRUE(fs::exists(dir / "out" / "mini.ours.manifest.json"));
  std::istringstream report(slurp(dir / "out" / "mini.ours.filter.jsonl"));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(report, line)) {
    auto row = ordered_json::parse(line);
    EXPECT_TRUE(row["accepted"].get<bool>());
    ++rows;
  }
  EXPECT_GE(rows, 5u);
}

TEST(Cli, BuildIsByteIdenticalAcrossRunsAndWorkerCounts) {
  fs::path dir = scratch("determinism");
  fs::path corpus = sample_corpus(dir);
  ASSERT_EQ(run({"build", "--corpus", corpus.string(), "--out", (dir / "a").string()}).code, 0);
  ASSERT_EQ(run({"build", "--corpus", corpus.string(), "--out", (dir / "b").string(), "--workers", "3"}).code, 0);
  for (const char* name : {"mini.ours.jsonl", "mini.ours.manifest.json", "mini.ours.filter.jsonl"}) {
    EXPECT_EQ(slurp(dir / "a" / name), slurp(dir / "b" / name)) << name;
  }
}

TEST(Cli, FlagOverridesConfigFile) {
  fs::path dir = scratch("override");
  fs::path corpus = sample_corpus(dir);
  spit(dir / "cfg.json", ordered_json{{"corpus_dir", corpus.string()},
                                      {"output_dir", (dir / "out").string()},
                                      {"filters", {{"max_trace_lines", 5}}}}
                             .dump());
  auto tight = run({"--config", (dir / "cfg.json").string(), "build"});
  EXPECT_EQ(tight.code, 1);
  EXPECT_EQ(tight.err.rfind("error: empty_corpus", 0), 0u);
  std::string report = slurp(dir / "out" / "mini.ours.filter.jsonl");
  EXPECT_NE(report.find("\"trace_too_long\""), std::string::npos);

  auto loose = run({"--config", (dir / "cfg.json").string(), "build", "--max-trace-lines", "300"});
  EXPECT_EQ(loose.code, 0) << loose.err;
}

TEST(Cli, FilterReportsEveryUnit) {
  fs::path dir = scratch("filter");
  fs::path corpus = sample_corpus(dir);
  spit(corpus / "dice" / "question.txt", "Roll a die.");
  spit(corpus / "dice" / "solution.py", "import random\n\ndef main_solution(n):\n    return n\n");
  spit(corpus / "dice" / "inputs.jsonl", "{\"n\": 1}\n");
  auto r = run({"filter", "--corpus", corpus.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find(R"({"program_id":"dice#0","stage":"pre","rule_id":"banned_module","accepted":false)"),
            std::string::npos)
      << r.out;
}

TEST(Cli, VerifyFlagsTamperedRecord) {
  fs::path dir = scratch("verify");
  fs::path corpus = sample_corpus(dir);
  ASSERT_EQ(run({"build", "--corpus", corpus.string(), "--out", (dir / "out").string()}).code, 0);
  fs::path dataset = dir / "out" / "mini.ours.jsonl";
  auto ok = run({"verify", "--dataset", dataset.string()});
  EXPECT_EQ(ok.code, 0) << ok.err;

  std::istringstream in(slurp(dataset));
  std::string line, rewritten, victim;
  for (int i = 0; std::getline(in, line); ++i) {
    if (i == 1) {
      auto row = ordered_json::parse(line);
      victim = row["record_id"];
      std::string output = row["meta"]["output"];
      for (char& c : output) {
        if (c >= '0' && c <= '9') {
          c = c == '9' ? '0' : static_cast<char>(c + 1);
          break;
        }
      }
      row["meta"]["output"] = output;
      line = row.dump();
    }
    rewritten += line + "\n";
  }
  spit(dataset, rewritten);
  auto bad = run({"verify", "--dataset", dataset.string()});
  EXPECT_EQ(bad.code, 1);
  EXPECT_EQ(bad.err, "error: verification_failed: " + victim + "\n");
}

TEST(Cli, StatsOverCompletionsFile) {
  fs::path dir = scratch("stats");
  spit(dir / "c.jsonl",
       "{\"text\": \"a b c\", \"finish_reason\": \"stop\"}\n"
       "{\"text\": \"a b c d e\", \"finish_reason\": \"length\"}\n");
  auto r = run({"stats", "--completions", (dir / "c.jsonl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = ordered_json::parse(r.out);
  EXPECT_DOUBLE_EQ(j["average_tokens"].get<double>(), 4.0);
  EXPECT_EQ(j["max_reached_count"], 1);

  spit(dir / "empty.jsonl", "");
  auto empty = run({"stats", "--completions", (dir / "empty.jsonl").string()});
  EXPECT_EQ(empty.code, 1);
  EXPECT_EQ(empty.err.rfind("error: empty_sample", 0), 0u);
}

TEST(Cli, NaturalizeJson) {
  auto r = run({"naturalize", "--program", "base7", "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = ordered_json::parse(r.out);
  EXPECT_EQ(j["mode"], "rule_based");
  EXPECT_NE(j["final_answer"].get<std::string>().find("'202'"), std::string::npos);
}

TEST_F(ClearGatewayEnv, LlmModeWithoutEndpointIsConfigError) {
  EXPECT_EQ(run({"translate", "--program", "base7"}).code, 3);
  fs::path dir = scratch("noendpoint");
  fs::path corpus = sample_corpus(dir);
  EXPECT_EQ(run({"build", "--corpus", corpus.string(), "--out", dir.string(), "--mode", "llm"}).code, 3);
}

TEST_F(ClearGatewayEnv, LlmBuildThroughStubEndpoint) {
  // The stub answers every translation request with a grounded rationale for base7 on 100.
  const auto* sample = lang::find_sample("base7");
  auto program = lang::parse(sample->source, "base7", sample->line_offset);
  auto trace = runtime::execute(program, runtime::binding_from_json(ordered_json::parse(sample->example_input))).trace;
  std::string answer = "<think>check the digits</think>\n" +
                       naturalizer::completion_text(naturalizer::naturalize_rule_based(sample->question, trace));

  httplib::Server server;
  int hits = 0;
  server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    ordered_json body = {{"choices", {{{"index", 0},
                                       {"message", {{"role", "assistant"}, {"content", answer}}},
                                       {"finish_reason", "stop"}}}}};
    res.set_content(body.dump(), "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  fs::path dir = scratch("llm");
  fs::path corpus = dir / "one";
  spit(corpus / "base7" / "question.txt", std::string(sample->question));
  spit(corpus / "base7" / "solution.py", std::string(sample->source));
  spit(corpus / "base7" / "inputs.jsonl", std::string(sample->example_input) + "\n");
  spit(corpus / "base7" / "meta.json", "{\"line_offset\": 37}");
  spit(dir / "cfg.json", ordered_json{{"model_name", "stub-model"},
                                      {"gateway", {{"endpoint", "http://127.0.0.1:" + std::to_string(port) + "/v1"},
                                                   {"cache_dir", (dir / "cache").string()}}}}
                             .dump());

  auto r = run({"--config", (dir / "cfg.json").string(), "build", "--corpus", corpus.string(), "--out",
                (dir / "out").string(), "--mode", "llm"});
  server.stop();
  thread.join();
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(hits, 1);
  auto row = ordered_json::parse(slurp(dir / "out" / "one.ours.jsonl"));
  EXPECT_EQ(row["meta"]["nl_trace"]["mode"], "llm_translated");
  EXPECT_EQ(run({"verify", "--dataset", (dir / "out" / "one.ours.jsonl").string()}).code, 0);
  EXPECT_FALSE(slurp(dir / "out" / "one.ours.gateway.jsonl").empty());

  // A second build is served from the cache and gives the same bytes.
  std::string first = slurp(dir / "out" / "one.ours.jsonl");
  ASSERT_EQ(run({"--config", (dir / "cfg.json").string(), "build", "--corpus", corpus.string(), "--out",
                 (dir / "out").string(), "--mode", "llm"})
                .code,
            0);
  EXPECT_EQ(hits, 1);
  EXPECT_EQ(slurp(dir / "out" / "one.ours.jsonl"), first);
}
