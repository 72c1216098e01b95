// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tracecot/cli/cli.hpp"
#include "tracecot/dataset/dataset.hpp"
#include "tracecot/dataset/pipeline.hpp"
#include "tracecot/dataset/verify.hpp"
#include "tracecot/filters/filters.hpp"
#include "tracecot/lang/samples.hpp"
#include "tracecot/naturalizer/naturalizer.hpp"
#include "tracecot/runtime/interpreter.hpp"
#include "tracecot/verifier/verifier.hpp"

using namespace tracecot;
using nlohmann::ordered_json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool condition, const std::string& what) {
    if (!condition && ok) {
      ok = false;
      detail = what;
    }
  }
};

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
  fs::path dir = fs::temp_directory_path() / ("tracecot_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

double millis_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

runtime::ExecutionResult run_sample(const std::string& name, const std::string& input_json) {
  const auto* s = lang::find_sample(name);
  auto program = lang::parse(s->source, std::string(s->name), s->line_offset);
  return runtime::execute(program, runtime::binding_from_json(ordered_json::parse(input_json)));
}

int cli(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
  args.insert(args.begin(), "tracecot");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  int code = cli::run_command(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return code;
}

// Reprs of lists of plain lowercase strings read as JSON once the quotes are swapped.
std::vector<std::string> string_list(const std::string& repr) {
  std::string json = repr;
  std::replace(json.begin(), json.end(), '\'', '"');
  return ordered_json::parse(json).get<std::vector<std::string>>();
}

// Stand everyone in a circle and count k living people at a time.
int josephus_by_simulation(int n, int k) {
  std::vector<bool> alive(static_cast<std::size_t>(n), true);
  int remaining = n;
  int pos = n - 1;
  while (remaining > 1) {
    int counted = 0;
    while (counted < k) {
      pos = (pos + 1) % n;
      if (alive[static_cast<std::size_t>(pos)]) ++counted;
    }
    alive[static_cast<std::size_t>(pos)] = false;
    --remaining;
  }
  for (int i = 0; i < n; ++i) {
    if (alive[static_cast<std::size_t>(i)]) return i + 1;
  }
  return -1;
}

std::size_t newline_count(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

// Changes one character of `text`: the first digit or letter moves to the next one.
std::string mutate_one_byte(std::string text) {
  for (char& c : text) {
    if (c >= '0' && c <= '9') {
      c = c == '9' ? '0' : static_cast<char>(c + 1);
      return text;
    }
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
      c = c == 'z' ? 'a' : c == 'Z' ? 'A' : static_cast<char>(c + 1);
      return text;
    }
  }
  return text + "0";
}

const fs::path kSourceDir = TRACECOT_SOURCE_DIR;
const fs::path kCorpus = kSourceDir / "corpus" / "sample";

Check ac1_golden_trace() {
  Check c;
  std::string golden = slurp(kSourceDir / "tests" / "golden" / "base7_num100.trace");
  auto start = Clock::now();
  auto result = run_sample("base7", R"({"num": 100})");
  std::string rendered = runtime::render_trace(result.trace);
  double ms = millis_since(start);
  c.expect(!golden.empty(), "golden file missing");
  c.expect(rendered == golden, "rendered trace differs from the golden trace");
  c.expect(rendered.ends_with("<<< Return value from main_solution: '202'\n"),
           "last line is not the '202' return");
  c.expect(ms < 1000.0, "took " + std::to_string(ms) + " ms");
  if (c.ok) c.detail = "byte-identical, " + std::to_string(newline_count(rendered)) + " lines";
  return c;
}

Check ac2_case_studies() {
  Check c;
  auto start = Clock::now();
  auto jos = run_sample("josephus", R"({"n": 17, "k": 3})");
  auto perm = run_sample("permutations", R"({"string": "hrf"})");
  double ms = millis_since(start);
  c.expect(jos.value && runtime::repr_value(*jos.value) == "11", "josephus did not return 11");
  std::vector<std::string> expected = {"hrf", "hfr", "rhf", "rfh", "fhr", "frh"};
  c.expect(perm.value && string_list(runtime::repr_value(*perm.value)) == expected,
           "permutations of 'hrf' in the wrong order");
  c.expect(ms < 1000.0, "took " + std::to_string(ms) + " ms");
  if (c.ok) c.detail = "josephus 11, hrf order exact";
  return c;
}

Check ac3_oracles() {
  Check c;
  auto start = Clock::now();
  int cases = 0;
  for (int n = 1; n <= 20; ++n) {
    for (int k = 1; k <= 5; ++k) {
      auto r = run_sample("josephus", "{\"n\": " + std::to_string(n) + ", \"k\": " + std::to_string(k) + "}");
      int expected = josephus_by_simulation(n, k);
      c.expect(r.value && runtime::repr_value(*r.value) == std::to_string(expected),
               "josephus n=" + std::to_string(n) + " k=" + std::to_string(k));
      ++cases;
    }
  }
  std::string letters = "abcde";
  for (std::size_t n = 1; n <= 5; ++n) {
    std::string word = letters.substr(0, n);
    auto r = run_sample("permutations", "{\"string\": \"" + word + "\"}");
    if (!r.value) {
      c.expect(false, "permutations failed for n=" + std::to_string(n));
      continue;
    }
    auto got = string_list(runtime::repr_value(*r.value));
    std::size_t factorial = 1;
    for (std::size_t i = 2; i <= n; ++i) factorial *= i;
    std::set<std::string> distinct(got.begin(), got.end());
    c.expect(got.size() == factorial && distinct.size() == factorial,
             "expected " + std::to_string(factorial) + " distinct orderings for n=" + std::to_string(n));
    // Sorted distinct letters come out in lexicographic order.
    std::vector<std::string> lexicographic;
    std::string w = word;
    do lexicographic.push_back(w);
    while (std::next_permutation(w.begin(), w.end()));
    c.expect(got == lexicographic, "permutation order differs for n=" + std::to_string(n));
  }
  double ms = millis_since(start);
  c.expect(ms < 5000.0, "took " + std::to_string(ms) + " ms");
  if (c.ok) c.detail = std::to_string(cases) + " josephus cases, n! orderings for n=1..5";
  return c;
}

constexpr const char* kPadded =
    "def main_solution(n, pad):\n"
    "    total = 0\n"
    "    for i in range(n):\n"
    "        total += 1\n"
    "    if pad > 0:\n"
    "        pass\n"
    "    if pad > 1:\n"
    "        pass\n"
    "    return total\n";

Check ac4_filter_boundary() {
  Check c;
  auto program = lang::parse(kPadded, "padded");
  filters::FilterConfig config;
  // Find inputs whose rendered trace is 300 and 301 lines by counting the rendered text.
  std::optional<runtime::ExecutionTrace> at, over;
  for (int n = 0; n <= 100 && !(at && over); ++n) {
    for (int pad = 0; pad <= 2; ++pad) {
      auto input = runtime::binding_from_json(
          ordered_json{{"n", n}, {"pad", pad}});
      auto trace = runtime::execute(program, input).trace;
      std::size_t lines = newline_count(runtime::render_trace(trace));
      if (lines == 300 && !at) at = trace;
      if (lines == 301 && !over) over = trace;
    }
  }
  c.expect(at && over, "no synthetic input reaches 300 and 301 lines");
  if (!c.ok) return c;
  auto accepted = filters::post_filter(*at, config);
  auto rejected = filters::post_filter(*over, config);
  c.expect(accepted.accepted, "300-line trace rejected: " + accepted.rule_id);
  c.expect(!rejected.accepted && rejected.rule_id == "trace_too_long", "301-line trace not rejected as trace_too_long");

  // The randomness program is stopped before it runs: its unit gets a single pre-stage decision.
  fs::path dir = scratch("banned");
  spit(dir / "c" / "dice" / "question.txt", "Roll a die n times.");
  spit(dir / "c" / "dice" / "solution.py",
       "import random\n\ndef main_solution(n):\n    return random.randint(1, n)\n");
  spit(dir / "c" / "dice" / "inputs.jsonl", "{\"n\": 6}\n");
  auto result = dataset::build_corpus(dataset::load_corpus((dir / "c").string()), dataset::PipelineOptions{});
  c.expect(result.decisions.size() == 1, "randomness unit produced " + std::to_string(result.decisions.size()) + " decisions");
  if (result.decisions.size() == 1) {
    const auto& d = result.decisions[0].decision;
    c.expect(!d.accepted && d.stage == filters::Stage::Pre && d.rule_id == "banned_module",
             "randomness program not rejected pre-execution");
  }
  if (c.ok) c.detail = "300 accepted, 301 trace_too_long, random banned_module at pre";
  return c;
}

Check ac5_groundedness() {
  Check c;
  auto corpus = dataset::load_corpus(kCorpus.string());
  c.expect(corpus.instances.size() >= 20, "corpus has only " + std::to_string(corpus.instances.size()) + " instances");
  auto result = dataset::build_corpus(corpus, dataset::PipelineOptions{});
  std::size_t checked = 0;
  for (const auto& record : result.records) {
    auto program = lang::parse(record.code, record.record_id, record.line_offset);
    auto trace = runtime::execute(program, runtime::binding_from_json(record.input_json)).trace;
    auto report = verifier::check_groundedness(*record.nl_trace, trace, record.input_repr, record.question);
    c.expect(report.violations.empty(), "record " + record.record_id + " has ungrounded literals");
    ++checked;
  }
  c.expect(checked >= 20, "only " + std::to_string(checked) + " rationales checked");

  // Swap 'rhf' for 'rhn' in one step of the permutations rationale.
  auto perm = run_sample("permutations", R"({"string": "hrf"})");
  auto nl = naturalizer::naturalize_rule_based(lang::find_sample("permutations")->question, perm.trace);
  bool swapped = false;
  for (std::size_t i = 0; i + 1 < nl.steps.size() && !swapped; ++i) {
    auto pos = nl.steps[i].find("'rhf'");
    if (pos != std::string::npos) {
      nl.steps[i].replace(pos, 5, "'rhn'");
      swapped = true;
    }
  }
  c.expect(swapped, "no step mentions 'rhf'");
  auto report = verifier::check_groundedness(nl, perm.trace, "{'string': 'hrf'}");
  c.expect(report.violations.size() == 1 && report.violations[0].second == "rhn",
           "rhn fixture gave " + std::to_string(report.violations.size()) + " violations");
  if (c.ok) {
    c.detail = std::to_string(checked) + " rationales over " + std::to_string(corpus.instances.size()) +
               " instances grounded; rhn flagged once";
  }
  return c;
}

Check ac6_determinism() {
  Check c;
  fs::path dir = scratch("determinism");
  std::string err;
  c.expect(cli({"build", "--corpus", kCorpus.string(), "--out", (dir / "a").string()}, nullptr, &err) == 0, err);
  c.expect(cli({"build", "--corpus", kCorpus.string(), "--out", (dir / "b").string(), "--workers", "2"}, nullptr,
               &err) == 0,
           err);
  for (const char* name : {"sample.ours.jsonl", "sample.ours.manifest.json", "sample.ours.filter.jsonl"}) {
    std::string a = slurp(dir / "a" / name);
    c.expect(!a.empty() && a == slurp(dir / "b" / name), std::string(name) + " differs between builds");
  }
  if (c.ok) c.detail = "JSONL, manifest and filter report byte-identical";
  return c;
}

Check ac7_soundness() {
  Check c;
  fs::path dir = scratch("soundness");
  std::string err;
  c.expect(cli({"build", "--corpus", kCorpus.string(), "--out", dir.string()}, nullptr, &err) == 0, err);
  if (!c.ok) return c;
  fs::path path = dir / "sample.ours.jsonl";
  auto fresh = dataset::verify_dataset(path.string());
  std::size_t correct = 0;
  for (const auto& v : fresh) correct += v.ok() ? 1 : 0;
  c.expect(!fresh.empty() && correct == fresh.size(),
           std::to_string(correct) + "/" + std::to_string(fresh.size()) + " records verified");

  std::vector<std::string> lines;
  {
    std::istringstream in(slurp(path));
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
  }
  // Tamper with each record in turn; verify must flag exactly that one.
  fs::path tampered = dir / "tampered.jsonl";
  for (std::size_t i = 0; i < lines.size() && c.ok; ++i) {
    std::string text;
    std::string victim;
    for (std::size_t j = 0; j < lines.size(); ++j) {
      if (j == i) {
        auto row = ordered_json::parse(lines[j]);
        victim = row["record_id"];
        row["meta"]["output"] = mutate_one_byte(row["meta"]["output"].get<std::string>());
        text += row.dump() + "\n";
      } else {
        text += lines[j] + "\n";
      }
    }
    spit(tampered, text);
    std::vector<std::string> failing;
    for (const auto& v : dataset::verify_dataset(tampered.string())) {
      if (!v.ok()) failing.push_back(v.record_id);
    }
    c.expect(failing == std::vector<std::string>{victim}, "tampering record " + std::to_string(i) + " flagged " +
                                                              std::to_string(failing.size()) + " records");
  }
  std::string cli_err;
  c.expect(cli({"verify", "--dataset", tampered.string()}, nullptr, &cli_err) == 1, "verify did not exit 1");
  if (c.ok) {
    c.detail = std::to_string(correct) + "/" + std::to_string(fresh.size()) +
               " correct; each of " + std::to_string(lines.size()) + " tampered records flagged alone";
  }
  return c;
}

Check ac8_token_stats() {
  Check c;
  // Whitespace token counts worked out by hand in the trailing comments.
  std::vector<std::pair<std::string, std::string>> completions = {
      {"one two three", "stop"},                                        // 3
      {"a b c d e", "length"},                                          // 5
      {"x  y\tz\nw", "stop"},                                           // 4
      {"single", "stop"},                                               // 1
      {"", "length"},                                                   // 0
      {"p q r s t u v w x y z", "stop"},                                // 11
      {"  leading and trailing  ", "stop"},                             // 3
      {"1 2 3 4 5 6 7 8 9 10 11 12 13 14 15 16 17 18 19 20", "length"}, // 20
      {"step 1: add 2 and 3", "stop"},                                  // 6
      {"**Answer**:\n'202'", "stop"},                                   // 2
  };
  const double expected_average = 5.5;  // 55 tokens over 10 completions
  const std::size_t expected_truncated = 3;
  auto stats = verifier::token_stats(completions, 16382);
  c.expect(std::fabs(stats.average_tokens - expected_average) < 1e-9,
           "average " + std::to_string(stats.average_tokens));
  c.expect(stats.max_reached_count == expected_truncated, "length count " + std::to_string(stats.max_reached_count));
  c.expect(stats.sample_count == 10, "sample count");
  std::reverse(completions.begin(), completions.end());
  auto reversed = verifier::token_stats(completions, 16382);
  c.expect(reversed.average_tokens == stats.average_tokens && reversed.max_reached_count == stats.max_reached_count,
           "stats depend on order");
  if (c.ok) c.detail = "average 5.5, 3 length-truncated";
  return c;
}

Check ac9_prompts() {
  Check c;
  auto r = run_sample("base7", R"({"num": 100})");
  const auto* s = lang::find_sample("base7");
  auto program = lang::parse(s->source, "base7", s->line_offset);
  auto input = ordered_json::parse(s->example_input);
  auto nl = naturalizer::naturalize_rule_based(s->question, r.trace);
  auto llm_nl = nl;
  llm_nl.mode = naturalizer::Mode::LlmTranslated;

  auto prompt_for = [&](dataset::Variant v) {
    std::optional<naturalizer::NlTrace> rationale;
    if (v == dataset::Variant::Ours) rationale = nl;
    if (v == dataset::Variant::CodeioStyle) rationale = llm_nl;
    return dataset::render_user_prompt(dataset::build_record(s->question, program, input, r.trace, rationale, v));
  };
  const std::string output_prediction = "step by step to reach the final output.";
  c.expect(prompt_for(dataset::Variant::Ours).find(output_prediction) != std::string::npos, "ours prompt");
  c.expect(prompt_for(dataset::Variant::CodeioStyle).find(output_prediction) != std::string::npos,
           "codeio_style prompt");
  c.expect(prompt_for(dataset::Variant::RawTrace).find("Generate a step-by-step execution trace") != std::string::npos,
           "raw_trace prompt");
  c.expect(prompt_for(dataset::Variant::CodeGen).find("Generate a solution code that solves the question.") !=
               std::string::npos,
           "code_gen prompt");
  auto translation = naturalizer::build_translation_prompt(s->question, "{'num': 100}", runtime::render_trace(r.trace));
  c.expect(translation.user_text.find("translate the execution trace into a step-by-step thinking process") !=
               std::string::npos,
           "translation prompt");
  if (c.ok) c.detail = "all four sentinels present";
  return c;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
      {"AC1 golden trace fidelity", ac1_golden_trace},
      {"AC2 case-study correctness", ac2_case_studies},
      {"AC3 oracle equivalence", ac3_oracles},
      {"AC4 filter boundary", ac4_filter_boundary},
      {"AC5 groundedness", ac5_groundedness},
      {"AC6 end-to-end determinism", ac6_determinism},
      {"AC7 pipeline soundness", ac7_soundness},
      {"AC8 token statistics", ac8_token_stats},
      {"AC9 prompt fidelity", ac9_prompts},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Check result;
    try {
      result = check();
    } catch (const std::exception& e) {
      result.ok = false;
      result.detail = std::string("exception: ") + e.what();
    }
    if (!result.ok) ++failures;
    std::cout << (result.ok ? "PASS " : "FAIL ") << name << ": " << result.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
