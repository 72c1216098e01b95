#include "tracecot/dataset/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "tracecot/common/error.hpp"
#include "tracecot/common/hash.hpp"
#include "tracecot/naturalizer/naturalizer.hpp"
#include "tracecot/runtime/interpreter.hpp"
#include "tracecot/verifier/verifier.hpp"

namespace tracecot::dataset {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::optional<std::string> read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct UnitResult {
  std::vector<filters::FilterDecision> decisions;
  std::optional<DatasetRecord> record;
};

UnitResult reject(UnitResult unit, filters::Stage stage, std::string rule, std::string detail) {
  unit.decisions.push_back(filters::FilterDecision::reject(stage, std::move(rule), std::move(detail)));
  return unit;
}

}  // namespace

Corpus load_corpus(const std::string& dir) {
  fs::path root(dir);
  if (!fs::is_directory(root)) throw Error("corpus_not_found", dir + " is not a directory");
  Corpus corpus;
  corpus.name = root.filename().empty() ? root.parent_path().filename().string() : root.filename().string();

  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());

  std::string hash_material;
  for (const auto& d : dirs) {
    Instance instance;
    instance.id = d.filename().string();
    auto question = read_text(d / "question.txt");
    auto source = read_text(d / "solution.py");
    auto inputs = read_text(d / "inputs.jsonl");
    if (!question || !source || !inputs) {
      throw Error("corpus_format", instance.id + " needs question.txt, solution.py and inputs.jsonl");
    }
    instance.question = trim(*question);
    instance.source = *source;
    if (auto meta = read_text(d / "meta.json")) {
      ordered_json json = ordered_json::parse(*meta, nullptr, false);
      if (json.is_discarded() || !json.is_object()) {
        throw Error("corpus_format", instance.id + "/meta.json is not a JSON object");
      }
      instance.line_offset = json.value("line_offset", 0);
      hash_material += *meta;
    }
    std::istringstream lines(*inputs);
    std::string line;
    std::size_t number = 0;
    while (std::getline(lines, line)) {
      ++number;
      if (trim(line).empty()) continue;
      ordered_json input = ordered_json::parse(line, nullptr, false);
      if (input.is_discarded()) {
        throw Error("corpus_format", instance.id + "/inputs.jsonl:" + std::to_string(number) +
                                         ": not valid JSON");
      }
      instance.inputs.push_back(std::move(input));
    }
    hash_material += instance.id + '\x1e' + *question + '\x1e' + *source + '\x1e' + *inputs + '\x1d';
    corpus.instances.push_back(std::move(instance));
  }
  corpus.content_hash = sha256_hex(hash_material);
  return corpus;
}

ordered_json options_snapshot(const PipelineOptions& options) {
  const auto& f = options.filters;
  ordered_json snapshot = {
      {"variant", to_string(options.variant)},
      {"mode", options.mode == RationaleMode::RuleBased ? "rule_based" : "llm"},
      {"filters",
       {{"banned_modules", f.policy.banned_modules},
        {"max_input_bytes", f.max_input_bytes},
        {"max_trace_lines", f.max_trace_lines},
        {"max_steps", f.limits.max_steps},
        {"max_call_depth", f.limits.max_call_depth},
        {"max_collection_size", f.limits.max_collection_size},
        {"wall_clock_ms", f.limits.wall_clock_limit.count()}}}};
  // Worker count is left out on purpose: it never changes the output.
  if (options.mode == RationaleMode::Llm) {
    ordered_json sampling = {{"temperature", options.sampling.temperature},
                             {"top_p", options.sampling.top_p},
                             {"max_tokens", options.sampling.max_tokens}};
    if (options.sampling.top_k) sampling["top_k"] = *options.sampling.top_k;
    snapshot["model"] = options.model_name;
    snapshot["sampling"] = sampling;
    snapshot["extra_body"] = options.extra_body;
  }
  return snapshot;
}

namespace {

UnitResult run_unit(const Instance& instance, const lang::SourceProgram* program,
                    const std::string& parse_error, const ordered_json& input,
                    const PipelineOptions& options) {
  UnitResult unit;
  using filters::Stage;
  if (program == nullptr) return reject(std::move(unit), Stage::Pre, "parse_error", parse_error);
  if (!input.is_object()) return reject(std::move(unit), Stage::Pre, "invalid_input", "input is not a JSON object");

  runtime::Binding binding;
  try {
    binding = runtime::binding_from_json(input);
  } catch (const Error& e) {
    return reject(std::move(unit), Stage::Pre, "invalid_input", e.detail());
  }

  filters::FilterDecision pre = filters::pre_filter(*program, binding, options.filters);
  unit.decisions.push_back(pre);
  if (!pre.accepted) return unit;

  runtime::ExecutionResult result;
  try {
    result = runtime::execute(*program, binding, options.filters.limits);
  } catch (const Error& e) {
    return reject(std::move(unit), Stage::During, e.code(), e.detail());
  }
  filters::FilterDecision post = filters::post_filter(result.trace, options.filters);
  unit.decisions.push_back(post);
  if (!post.accepted) return unit;

  std::string input_repr = runtime::repr_binding(binding);
  std::optional<naturalizer::NlTrace> nl;
  try {
    if (options.variant == Variant::Ours) {
      if (options.mode == RationaleMode::RuleBased) {
        nl = naturalizer::naturalize_rule_based(instance.question, result.trace);
        auto report = verifier::check_groundedness(*nl, result.trace, input_repr, instance.question);
        if (!report.grounded()) {
          return reject(std::move(unit), Stage::Post, "ungrounded_translation",
                        "rule-based rationale has " + std::to_string(report.violations.size()) +
                            " ungrounded literal(s)");
        }
      } else {
        nl = llm::translate(*options.gateway, options.model_name, instance.question, input_repr,
                            runtime::render_trace(result.trace), result.trace, options.sampling,
                            options.extra_body);
      }
    } else if (options.variant == Variant::CodeioStyle) {
      // The baseline reasons from question, code and input alone.
      DatasetRecord probe = build_record(instance.question, *program, input, result.trace,
                                         naturalizer::NlTrace{{"-"}, "-", naturalizer::Mode::LlmTranslated},
                                         Variant::CodeioStyle);
      llm::ChatRequest request;
      request.model_name = options.model_name;
      request.messages.push_back({"user", render_user_prompt(probe)});
      request.sampling = options.sampling;
      request.extra_body = options.extra_body;
      nl = naturalizer::parse_completion(options.gateway->complete(request).content);
    }
  } catch (const Error& e) {
    return reject(std::move(unit), Stage::Post, e.code(), e.detail());
  }

  unit.record = build_record(instance.question, *program, input, result.trace, std::move(nl),
                             options.variant);
  return unit;
}

}  // namespace

BuildResult build_corpus(const Corpus& corpus, const PipelineOptions& options) {
  if (options.workers == 0) throw Error("config_error", "worker count must be at least 1");
  if (!options.filters.valid()) throw Error("config_error", "filter limits must be positive");
  bool needs_llm = options.variant == Variant::CodeioStyle ||
                   (options.variant == Variant::Ours && options.mode == RationaleMode::Llm);
  if (options.variant == Variant::CodeioStyle && options.mode != RationaleMode::Llm) {
    throw Error("config_error", "codeio_style records are generated by a model; use --mode llm");
  }
  if (needs_llm && options.gateway == nullptr) {
    throw Error("config_error", "llm mode needs a configured gateway");
  }

  // Parse each program once; every input of the instance shares it.
  struct Parsed {
    std::optional<lang::SourceProgram> program;
    std::string error;
  };
  std::vector<Parsed> parsed(corpus.instances.size());
  struct Job {
    std::size_t instance;
    std::size_t input;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < corpus.instances.size(); ++i) {
    const Instance& inst = corpus.instances[i];
    try {
      parsed[i].program.emplace(lang::parse(inst.source, inst.id, inst.line_offset));
    } catch (const Error& e) {
      parsed[i].error = e.detail();
    }
    for (std::size_t j = 0; j < inst.inputs.size(); ++j) jobs.push_back({i, j});
  }

  std::vector<UnitResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      const Job& job = jobs[k];
      const Instance& inst = corpus.instances[job.instance];
      const auto& p = parsed[job.instance];
      try {
        results[k] = run_unit(inst, p.program ? &*p.program : nullptr, p.error, inst.inputs[job.input],
                              options);
      } catch (const Error& e) {
        results[k] = reject({}, filters::Stage::Post, e.code(), e.detail());
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < std::min(options.workers, jobs.size()); ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  BuildResult build;
  build.submitted = jobs.size();
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    std::string program_id = corpus.instances[jobs[k].instance].id + "#" + std::to_string(jobs[k].input);
    for (auto& d : results[k].decisions) {
      if (!d.accepted) ++build.rejections[d.rule_id];
      build.decisions.push_back({program_id, std::move(d)});
    }
    if (results[k].record) build.records.push_back(std::move(*results[k].record));
  }
  return build;
}

}  // namespace tracecot::dataset
