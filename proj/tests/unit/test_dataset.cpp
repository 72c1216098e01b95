#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tracecot/dataset/dataset.hpp"
#include "tracecot/dataset/pipeline.hpp"
#include "tracecot/dataset/verify.hpp"
#include "tracecot/lang/samples.hpp"
#include "tracecot/naturalizer/naturalizer.hpp"
#include "tracecot/runtime/interpreter.hpp"

using namespace tracecot;
using namespace tracecot::dataset;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct Sample {
  std::string question;
  lang::SourceProgram program;
  ordered_json input;
  runtime::ExecutionTrace trace;
};

Sample sample(std::string_view name) {
  const auto* s = lang::find_sample(name);
  auto program = lang::parse(s->source, std::string(name), s->line_offset);
  auto input = ordered_json::parse(s->example_input);
  auto trace = runtime::execute(program, runtime::binding_from_json(input)).trace;
  return {std::string(s->question), std::move(program), input, std::move(trace)};
}

DatasetRecord ours(std::string_view name) {
  Sample s = sample(name);
  return build_record(s.question, s.program, s.input, s.trace,
                      naturalizer::naturalize_rule_based(s.question, s.trace), Variant::Ours);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("tracecot_dataset_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

void write_sample_corpus(const fs::path& root) {
  for (const auto& s : lang::sample_programs()) {
    fs::path d = root / std::string(s.name);
    write(d / "question.txt", std::string(s.question) + "\n");
    write(d / "solution.py", std::string(s.source));
    write(d / "inputs.jsonl", std::string(s.example_input) + "\n");
    if (s.line_offset != 0) write(d / "meta.json", "{\"line_offset\": " + std::to_string(s.line_offset) + "}\n");
  }
}

}  // namespace

TEST(Record, BaseSevenOurs) {
  DatasetRecord r = ours("base7");
  EXPECT_EQ(r.output_repr, "'202'");
  EXPECT_EQ(r.record_id.size(), 64u);
  EXPECT_EQ(r.record_id, ours("base7").record_id);
  EXPECT_NE(r.record_id, ours("josephus").record_id);
}

TEST(Record, OursNeedsRationale) {
  Sample s = sample("base7");
  try {
    build_record(s.question, s.program, s.input, s.trace, std::nullopt, Variant::Ours);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "variant_field_missing");
  }
  EXPECT_NO_THROW(build_record(s.question, s.program, s.input, s.trace, std::nullopt, Variant::RawTrace));
}

TEST(Prompts, VariantTemplates) {
  Sample s = sample("base7");
  auto rec = [&](Variant v) { return build_record(s.question, s.program, s.input, s.trace, ours("base7").nl_trace, v); };
  std::string p_ours = render_user_prompt(rec(Variant::Ours));
  const std::string tail = "step by step to reach the final output.";
  EXPECT_EQ(p_ours.substr(p_ours.size() - tail.size()), tail);
  EXPECT_NE(p_ours.find(s.program.source_text()), std::string::npos);
  EXPECT_NE(p_ours.find("{'num': 100}"), std::string::npos);
  EXPECT_EQ(p_ours, render_user_prompt(rec(Variant::CodeioStyle)));
  EXPECT_NE(render_user_prompt(rec(Variant::RawTrace)).find("Generate a step-by-step execution trace"), std::string::npos);
  std::string p_gen = render_user_prompt(rec(Variant::CodeGen));
  EXPECT_NE(p_gen.find("Generate a solution code that solves the question."), std::string::npos);
  EXPECT_EQ(p_gen.find("main_solution"), std::string::npos);
  EXPECT_EQ(p_ours.rfind("You are given a question that requires some input and output variables as follows:", 0), 0u);
}

TEST(Emit, DeterministicAndSorted) {
  fs::path dir = scratch("emit");
  std::vector<DatasetRecord> records = {ours("permutations"), ours("base7"), ours("josephus")};
  Manifest m1 = emit_jsonl(records, (dir / "a.ours.jsonl").string());
  std::reverse(records.begin(), records.end());
  emit_jsonl(records, (dir / "b.ours.jsonl").string());
  EXPECT_EQ(slurp(dir / "a.ours.jsonl"), slurp(dir / "b.ours.jsonl"));
  EXPECT_EQ(slurp(dir / "a.ours.manifest.json"), slurp(dir / "b.ours.manifest.json"));
  EXPECT_EQ(m1.counts.at("ours"), 3u);

  auto rows = read_jsonl((dir / "a.ours.jsonl").string());
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_LT(rows[0]["record_id"].get<std::string>(), rows[1]["record_id"].get<std::string>());
  EXPECT_LT(rows[1]["record_id"].get<std::string>(), rows[2]["record_id"].get<std::string>());
  for (const char* key : {"record_id", "variant", "prompt", "completion", "meta"}) EXPECT_TRUE(rows[0].contains(key));
  for (const char* key : {"question", "input", "output"}) EXPECT_TRUE(rows[0]["meta"].contains(key));
}

TEST(Emit, DuplicatesAndConservation) {
  fs::path dir = scratch("dups");
  EmitOptions options;
  options.prior_rejections = {{"trace_too_long", 2}};
  Manifest m = emit_jsonl({ours("base7"), ours("base7"), ours("josephus")}, (dir / "c.ours.jsonl").string(), options);
  EXPECT_EQ(m.emitted, 2u);
  EXPECT_EQ(m.rejections.at("duplicate_record"), 1u);
  std::size_t rejected = 0;
  for (const auto& [rule, n] : m.rejections) rejected += n;
  EXPECT_EQ(rejected + m.emitted, m.submitted);
  EXPECT_EQ(m.submitted, 5u);
}

TEST(Emit, EmptyCorpusAndUnsoundRecord) {
  fs::path dir = scratch("bad");
  try {
    emit_jsonl({}, (dir / "x.jsonl").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "empty_corpus");
  }
  DatasetRecord r = ours("base7");
  r.output_repr = "'203'";
  try {
    emit_jsonl({r}, (dir / "y.jsonl").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "unsound_record");
  }
}

TEST(Pipeline, SampleCorpusEndToEnd) {
  fs::path root = scratch("corpus");
  write_sample_corpus(root / "golden");
  Corpus corpus = load_corpus((root / "golden").string());
  EXPECT_EQ(corpus.name, "golden");
  ASSERT_EQ(corpus.instances.size(), 3u);

  PipelineOptions options;
  BuildResult one = build_corpus(corpus, options);
  options.workers = 3;
  BuildResult three = build_corpus(corpus, options);
  ASSERT_EQ(one.records.size(), 3u);
  ASSERT_EQ(three.records.size(), 3u);

  std::string path = (root / "out" / "golden.ours.jsonl").string();
  Manifest m = emit_jsonl(one.records, path);
  EXPECT_EQ(m.counts.at("ours"), 3u);
  for (const auto& v : verify_dataset(path)) EXPECT_TRUE(v.ok()) << v.record_id << ": " << v.detail;

  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(one.records[i].record_id, three.records[i].record_id);
}

TEST(Pipeline, RejectionsAreCounted) {
  fs::path root = scratch("rejects");
  write(root / "c" / "a_ok" / "question.txt", "double");
  write(root / "c" / "a_ok" / "solution.py", "def main_solution(x):\n    return x * 2\n");
  write(root / "c" / "a_ok" / "inputs.jsonl", "{\"x\": 1}\n{\"x\": 0}\n{\"y\": 1}\n");
  write(root / "c" / "b_rand" / "question.txt", "q");
  write(root / "c" / "b_rand" / "solution.py", "import random\ndef main_solution(x):\n    return x\n");
  write(root / "c" / "b_rand" / "inputs.jsonl", "{\"x\": 1}\n");
  write(root / "c" / "c_div" / "question.txt", "q");
  write(root / "c" / "c_div" / "solution.py", "def main_solution(x):\n    return 1 // x\n");
  write(root / "c" / "c_div" / "inputs.jsonl", "{\"x\": 0}\n");
  write(root / "c" / "d_syntax" / "question.txt", "q");
  write(root / "c" / "d_syntax" / "solution.py", "def main_solution(x)\n    return x\n");
  write(root / "c" / "d_syntax" / "inputs.jsonl", "{\"x\": 0}\n");

  BuildResult r = build_corpus(load_corpus((root / "c").string()), PipelineOptions{});
  EXPECT_EQ(r.submitted, 6u);
  EXPECT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.rejections.at("input_mismatch"), 1u);
  EXPECT_EQ(r.rejections.at("banned_module"), 1u);
  EXPECT_EQ(r.rejections.at("execution_failed"), 1u);
  EXPECT_EQ(r.rejections.at("parse_error"), 1u);
}

TEST(Pipeline, CodeioNeedsModel) {
  PipelineOptions options;
  options.variant = Variant::CodeioStyle;
  EXPECT_THROW(build_corpus(Corpus{}, options), Error);
}

TEST(Verify, TamperedOutputFlagsOnlyThatRecord) {
  fs::path dir = scratch("tamper");
  std::string path = (dir / "t.ours.jsonl").string();
  emit_jsonl({ours("base7"), ours("josephus"), ours("permutations")}, path);
  auto rows = read_jsonl(path);
  std::string victim = rows[1]["record_id"];
  rows[1]["meta"]["output"] = "12";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  for (const auto& row : rows) out << row.dump() << "\n";
  out.close();
  std::vector<std::string> failing;
  for (const auto& v : verify_dataset(path)) {
    if (!v.ok()) failing.push_back(v.record_id);
  }
  EXPECT_EQ(failing, std::vector<std::string>{victim});
}

TEST(Verify, OtherVariants) {
  fs::path dir = scratch("variants");
  Sample s = sample("josephus");
  for (Variant v : {Variant::RawTrace, Variant::CodeGen}) {
    std::string path = (dir / (std::string(to_string(v)) + ".jsonl")).string();
    emit_jsonl({build_record(s.question, s.program, s.input, s.trace, std::nullopt, v)}, path);
    auto results = verify_dataset(path);
    ASSERT_EQ(results.size(), 1u);
    EXPECT_TRUE(results[0].ok()) << results[0].detail;
    auto rows = read_jsonl(path);
    EXPECT_EQ(rows[0]["completion"], v == Variant::RawTrace ? runtime::render_trace(s.trace) : s.program.source_text());
  }
}
