#include "tracecot/cli/cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <vector>

#include <CLI11.hpp>

#include "tracecot/common/error.hpp"
#include "tracecot/dataset/verify.hpp"
#include "tracecot/lang/program.hpp"
#include "tracecot/lang/samples.hpp"
#include "tracecot/naturalizer/naturalizer.hpp"
#include "tracecot/runtime/interpreter.hpp"
#include "tracecot/runtime/trace.hpp"
#include "tracecot/verifier/verifier.hpp"

namespace tracecot::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void check_keys(const ordered_json& doc, const std::set<std::string>& allowed, const std::string& where) {
  if (!doc.is_object()) throw Error("config_invalid", where + " must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (!allowed.count(key)) throw Error("config_invalid", "unknown key " + where + "." + key);
  }
}

dataset::RationaleMode rationale_mode_from_string(std::string_view text) {
  if (text == "rule_based") return dataset::RationaleMode::RuleBased;
  if (text == "llm") return dataset::RationaleMode::Llm;
  throw Error("invalid_mode", std::string(text));
}

void apply_filters(filters::FilterConfig& f, const ordered_json& doc) {
  check_keys(doc,
             {"max_input_bytes", "max_trace_lines", "max_steps", "max_call_depth",
              "max_collection_size", "wall_clock_ms", "banned_modules"},
             "filters");
  if (doc.contains("max_input_bytes")) f.max_input_bytes = doc["max_input_bytes"].get<std::size_t>();
  if (doc.contains("max_trace_lines")) f.max_trace_lines = doc["max_trace_lines"].get<std::size_t>();
  if (doc.contains("max_steps")) f.limits.max_steps = doc["max_steps"].get<std::size_t>();
  if (doc.contains("max_call_depth")) f.limits.max_call_depth = doc["max_call_depth"].get<std::size_t>();
  if (doc.contains("max_collection_size")) {
    f.limits.max_collection_size = doc["max_collection_size"].get<std::size_t>();
  }
  if (doc.contains("wall_clock_ms")) {
    f.limits.wall_clock_limit = std::chrono::milliseconds(doc["wall_clock_ms"].get<std::int64_t>());
  }
  if (doc.contains("banned_modules")) {
    f.policy.banned_modules = doc["banned_modules"].get<std::set<std::string>>();
  }
}

void apply_sampling(llm::SamplingConfig& s, const ordered_json& doc) {
  check_keys(doc, {"temperature", "top_p", "top_k", "max_tokens"}, "sampling");
  if (doc.contains("temperature")) s.temperature = doc["temperature"].get<double>();
  if (doc.contains("top_p")) s.top_p = doc["top_p"].get<double>();
  if (doc.contains("top_k")) {
    if (doc["top_k"].is_null()) {
      s.top_k.reset();
    } else {
      s.top_k = doc["top_k"].get<int>();
    }
  }
  if (doc.contains("max_tokens")) s.max_tokens = doc["max_tokens"].get<int>();
}

void apply_gateway(llm::GatewayConfig& g, const ordered_json& doc) {
  check_keys(doc,
             {"endpoint", "max_retries", "initial_backoff_ms", "max_backoff_ms", "timeout_s",
              "cache_dir", "pool_width"},
             "gateway");
  if (doc.contains("endpoint")) g.endpoint = doc["endpoint"].get<std::string>();
  if (doc.contains("max_retries")) g.max_retries = doc["max_retries"].get<std::size_t>();
  if (doc.contains("initial_backoff_ms")) {
    g.initial_backoff = std::chrono::milliseconds(doc["initial_backoff_ms"].get<std::int64_t>());
  }
  if (doc.contains("max_backoff_ms")) {
    g.max_backoff = std::chrono::milliseconds(doc["max_backoff_ms"].get<std::int64_t>());
  }
  if (doc.contains("timeout_s")) g.timeout = std::chrono::seconds(doc["timeout_s"].get<std::int64_t>());
  if (doc.contains("cache_dir")) g.cache_dir = doc["cache_dir"].get<std::string>();
  if (doc.contains("pool_width")) g.pool_width = doc["pool_width"].get<std::size_t>();
}

void validate_config(const PipelineConfig& c) {
  if (c.workers == 0) throw Error("config_invalid", "workers must be at least 1");
  if (!c.filters.valid()) throw Error("config_invalid", "filter limits must be positive");
  if (!c.sampling.valid()) throw Error("config_invalid", "sampling parameters out of range");
  if (c.gateway.pool_width == 0) throw Error("config_invalid", "gateway.pool_width must be at least 1");
  if (c.gateway.max_backoff < c.gateway.initial_backoff) {
    throw Error("config_invalid", "gateway.max_backoff_ms is below initial_backoff_ms");
  }
}

bool is_config_code(const std::string& code) {
  static const std::set<std::string> codes = {"config_not_found", "config_invalid", "config_error",
                                              "invalid_variant", "invalid_mode",
                                              "gateway_not_configured"};
  return codes.count(code) > 0;
}

bool is_usage_code(const std::string& code) {
  return code == "usage" || code == "program_not_found" || code == "invalid_input";
}

// A program given on the command line: a bundled sample name, an instance
// directory (question.txt, solution.py, optional meta.json) or a source file.
struct ProgramSource {
  std::string id;
  std::string question;
  std::string source;
  int line_offset = 0;
  std::string default_input;
};

ProgramSource resolve_program(const std::string& ref) {
  if (const auto* sample = lang::find_sample(ref)) {
    return {std::string(sample->name), std::string(sample->question), std::string(sample->source),
            sample->line_offset, std::string(sample->example_input)};
  }
  fs::path path(ref);
  if (fs::is_directory(path)) {
    ProgramSource spec;
    spec.id = path.filename().string();
    spec.source = read_file(path / "solution.py");
    if (fs::exists(path / "question.txt")) spec.question = read_file(path / "question.txt");
    if (fs::exists(path / "meta.json")) {
      auto meta = ordered_json::parse(read_file(path / "meta.json"));
      spec.line_offset = meta.value("line_offset", 0);
    }
    if (fs::exists(path / "inputs.jsonl")) {
      std::istringstream lines(read_file(path / "inputs.jsonl"));
      std::string line;
      while (std::getline(lines, line)) {
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
          spec.default_input = line;
          break;
        }
      }
    }
    return spec;
  }
  if (fs::is_regular_file(path)) {
    return {path.stem().string(), "", read_file(path), 0, ""};
  }
  throw Error("program_not_found", ref + " is neither a bundled sample nor a file");
}

runtime::Binding parse_input(const std::string& text) {
  if (text.empty()) throw Error("invalid_input", "no input given; use --input");
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw Error("invalid_input", e.what());
  }
  if (!doc.is_object()) throw Error("invalid_input", "input must be a JSON object");
  try {
    return runtime::binding_from_json(doc);
  } catch (const Error& e) {
    throw Error("invalid_input", e.detail().empty() ? e.code() : e.detail());
  }
}

struct TracedProgram {
  ProgramSource spec;
  lang::SourceProgram program;
  runtime::Binding input;
  runtime::ExecutionResult result;
};

TracedProgram trace_program(const std::string& ref, const std::string& input_text,
                            const PipelineConfig& config) {
  ProgramSource spec = resolve_program(ref);
  runtime::Binding input = parse_input(input_text.empty() ? spec.default_input : input_text);
  lang::SourceProgram program = lang::parse(spec.source, spec.id, spec.line_offset);
  auto result = runtime::execute(program, input, config.filters.limits);
  return {std::move(spec), std::move(program), std::move(input), std::move(result)};
}

std::unique_ptr<llm::Gateway> make_gateway(const PipelineConfig& config, llm::LogSink log) {
  if (config.gateway.endpoint.empty()) {
    throw Error("gateway_not_configured",
                "set TRACECOT_LLM_ENDPOINT or gateway.endpoint in the config file");
  }
  return std::make_unique<llm::Gateway>(config.gateway, nullptr, nullptr, std::move(log));
}

llm::LogSink file_log(const fs::path& path) {
  auto stream = std::make_shared<std::ofstream>(path, std::ios::app);
  if (!*stream) throw Error("io_error", "cannot open " + path.string());
  auto guard = std::make_shared<std::mutex>();
  return [stream, guard](const ordered_json& entry) {
    std::lock_guard<std::mutex> lock(*guard);
    *stream << entry.dump() << '\n';
    stream->flush();
  };
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  return out;
}

dataset::PipelineOptions pipeline_options(const PipelineConfig& config, llm::Gateway* gateway) {
  dataset::PipelineOptions options;
  options.filters = config.filters;
  options.variant = config.variant;
  options.mode = config.mode;
  options.workers = config.workers;
  options.gateway = gateway;
  options.model_name = config.model_name;
  options.sampling = config.sampling;
  options.extra_body = config.extra_body;
  return options;
}

// Flags that override the config file; empty strings and zero mean "not given".
struct Overrides {
  std::string config_path;
  std::string variant;
  std::string mode;
  std::size_t max_trace_lines = 0;
  std::size_t workers = 0;
  std::string corpus;
  std::string out;
};

PipelineConfig effective_config(const Overrides& o) {
  PipelineConfig config;
  config.gateway = llm::GatewayConfig::from_env();
  if (!o.config_path.empty()) {
    config = load_config(o.config_path);
  }
  if (!o.variant.empty()) config.variant = dataset::variant_from_string(o.variant);
  if (!o.mode.empty()) config.mode = rationale_mode_from_string(o.mode);
  if (o.max_trace_lines) config.filters.max_trace_lines = o.max_trace_lines;
  if (o.workers) config.workers = o.workers;
  if (!o.corpus.empty()) config.corpus_dir = o.corpus;
  if (!o.out.empty()) config.output_dir = o.out;
  validate_config(config);
  return config;
}

int cmd_trace(const PipelineConfig& config, const std::string& program, const std::string& input,
              std::ostream& out, std::ostream& err) {
  auto traced = trace_program(program, input, config);
  out << runtime::render_trace(traced.result.trace);
  if (!traced.result.trace.completed()) {
    err << "error: execution_failed: run did not complete\n";
    return kExitPipeline;
  }
  return kExitOk;
}

int cmd_naturalize(const PipelineConfig& config, const std::string& program, const std::string& input,
                   bool as_json, std::ostream& out) {
  auto traced = trace_program(program, input, config);
  if (!traced.result.trace.completed()) throw Error("execution_failed", "run did not complete");
  auto nl = naturalizer::naturalize_rule_based(traced.spec.question, traced.result.trace);
  if (as_json) {
    out << naturalizer::to_json(nl).dump() << '\n';
  } else {
    out << naturalizer::completion_text(nl) << '\n';
  }
  return kExitOk;
}

int cmd_translate(const PipelineConfig& config, const std::string& program, const std::string& input,
                  const std::string& question, bool as_json, std::ostream& out) {
  auto traced = trace_program(program, input, config);
  if (!traced.result.trace.completed()) throw Error("execution_failed", "run did not complete");
  std::string q = question.empty() ? traced.spec.question : question;
  auto gateway = make_gateway(config, nullptr);
  auto nl = llm::translate(*gateway, config.model_name, q, runtime::repr_binding(traced.input),
                           runtime::render_trace(traced.result.trace), traced.result.trace,
                           config.sampling, config.extra_body);
  if (as_json) {
    out << naturalizer::to_json(nl).dump() << '\n';
  } else {
    out << naturalizer::completion_text(nl) << '\n';
  }
  return kExitOk;
}

int cmd_filter(const PipelineConfig& config, const std::string& report, std::ostream& out) {
  if (config.corpus_dir.empty()) throw Error("usage", "no corpus given; use --corpus");
  auto corpus = dataset::load_corpus(config.corpus_dir);
  PipelineConfig filter_only = config;
  // Raw-trace records need no rationale, so their decisions are exactly the filter decisions.
  filter_only.variant = dataset::Variant::RawTrace;
  filter_only.mode = dataset::RationaleMode::RuleBased;
  auto result = dataset::build_corpus(corpus, pipeline_options(filter_only, nullptr));

  std::ofstream file;
  std::ostream* sink = &out;
  if (!report.empty()) {
    file = open_output(report);
    sink = &file;
  }
  for (const auto& unit : result.decisions) filters::append_decision(*sink, unit.program_id, unit.decision);
  if (!report.empty()) {
    ordered_json summary = {{"submitted", result.submitted},
                            {"accepted", result.records.size()},
                            {"rejections", result.rejections}};
    out << summary.dump() << '\n';
  }
  return kExitOk;
}

int cmd_build(const PipelineConfig& config, std::ostream& out) {
  if (config.corpus_dir.empty()) throw Error("usage", "no corpus given; use --corpus");
  if (config.output_dir.empty()) throw Error("usage", "no output directory given; use --out");
  auto corpus = dataset::load_corpus(config.corpus_dir);
  fs::path out_dir(config.output_dir);
  fs::create_directories(out_dir);
  std::string stem = corpus.name + "." + std::string(dataset::to_string(config.variant));

  std::unique_ptr<llm::Gateway> gateway;
  if (config.mode == dataset::RationaleMode::Llm) {
    gateway = make_gateway(config, file_log(out_dir / (stem + ".gateway.jsonl")));
  }
  auto options = pipeline_options(config, gateway.get());
  auto result = dataset::build_corpus(corpus, options);

  {
    auto report = open_output(out_dir / (stem + ".filter.jsonl"));
    for (const auto& unit : result.decisions) filters::append_decision(report, unit.program_id, unit.decision);
  }

  dataset::EmitOptions emit;
  emit.prior_rejections = result.rejections;
  emit.config = dataset::options_snapshot(options);
  emit.corpus_hash = corpus.content_hash;
  emit.limits = config.filters.limits;
  std::string path = (out_dir / (stem + ".jsonl")).string();
  auto manifest = dataset::emit_jsonl(std::move(result.records), path, emit);

  ordered_json summary = {{"dataset", path},
                          {"manifest", dataset::manifest_path_for(path)},
                          {"submitted", manifest.submitted},
                          {"emitted", manifest.emitted}};
  out << summary.dump() << '\n';
  return kExitOk;
}

int cmd_verify(const PipelineConfig& config, const std::string& dataset_path, const std::string& report,
               std::ostream& out, std::ostream& err) {
  auto results = dataset::verify_dataset(dataset_path, config.filters.limits);
  std::ofstream file;
  std::ostream* sink = &out;
  if (!report.empty()) {
    file = open_output(report);
    sink = &file;
  }
  std::vector<std::string> failing;
  for (const auto& r : results) {
    *sink << dataset::to_json(r).dump() << '\n';
    if (!r.ok()) failing.push_back(r.record_id);
  }
  if (failing.empty()) return kExitOk;
  std::string ids;
  for (const auto& id : failing) ids += (ids.empty() ? "" : ",") + id;
  err << "error: verification_failed: " << ids << '\n';
  return kExitPipeline;
}

int cmd_stats(const PipelineConfig& config, const std::string& path, std::size_t max_tokens,
              std::ostream& out) {
  std::istringstream lines(read_file(path));
  std::vector<std::pair<std::string, std::string>> completions;
  std::string line;
  std::size_t number = 0;
  while (std::getline(lines, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto row = ordered_json::parse(line);
      completions.emplace_back(row.at("text").get<std::string>(),
                               row.value("finish_reason", std::string("stop")));
    } catch (const ordered_json::exception& e) {
      throw Error("invalid_completions", path + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  std::size_t limit = max_tokens ? max_tokens : static_cast<std::size_t>(config.sampling.max_tokens);
  out << verifier::to_json(verifier::token_stats(completions, limit)).dump() << '\n';
  return kExitOk;
}

}  // namespace

void apply_config(PipelineConfig& config, const ordered_json& doc) {
  try {
    check_keys(doc,
               {"corpus_dir", "output_dir", "variant", "mode", "workers", "model_name", "extra_body",
                "filters", "sampling", "gateway"},
               "config");
    if (doc.contains("corpus_dir")) config.corpus_dir = doc["corpus_dir"].get<std::string>();
    if (doc.contains("output_dir")) config.output_dir = doc["output_dir"].get<std::string>();
    if (doc.contains("variant")) config.variant = dataset::variant_from_string(doc["variant"].get<std::string>());
    if (doc.contains("mode")) config.mode = rationale_mode_from_string(doc["mode"].get<std::string>());
    if (doc.contains("workers")) config.workers = doc["workers"].get<std::size_t>();
    if (doc.contains("model_name")) config.model_name = doc["model_name"].get<std::string>();
    if (doc.contains("extra_body")) {
      if (!doc["extra_body"].is_object()) throw Error("config_invalid", "extra_body must be an object");
      config.extra_body = doc["extra_body"];
    }
    if (doc.contains("filters")) apply_filters(config.filters, doc["filters"]);
    if (doc.contains("sampling")) apply_sampling(config.sampling, doc["sampling"]);
    if (doc.contains("gateway")) apply_gateway(config.gateway, doc["gateway"]);
  } catch (const ordered_json::exception& e) {
    throw Error("config_invalid", e.what());
  }
}

PipelineConfig load_config(const std::string& path) {
  if (!fs::is_regular_file(path)) throw Error("config_not_found", path);
  ordered_json doc;
  try {
    doc = ordered_json::parse(read_file(path));
  } catch (const ordered_json::parse_error& e) {
    throw Error("config_invalid", e.what());
  }
  PipelineConfig config;
  config.gateway = llm::GatewayConfig::from_env();
  apply_config(config, doc);
  return config;
}

int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Execution-trace chain-of-thought dataset tools", "tracecot"};
  app.require_subcommand(1, 1);

  Overrides o;
  std::string program, input, question, report, dataset_path, completions;
  std::size_t max_tokens = 0;
  bool as_json = false;

  app.add_option("--config", o.config_path, "JSON config file");

  auto add_pipeline_flags = [&](CLI::App* sub) {
    sub->add_option("--variant", o.variant, "ours | raw_trace | code_gen | codeio_style");
    sub->add_option("--mode", o.mode, "rule_based | llm");
    sub->add_option("--max-trace-lines", o.max_trace_lines, "reject traces longer than this");
    sub->add_option("--workers", o.workers, "parallel workers");
  };
  auto add_program_flags = [&](CLI::App* sub) {
    sub->add_option("--program", program, "bundled sample name, instance directory or source file")
        ->required();
    sub->add_option("--input", input, "input binding as a JSON object");
  };

  auto* trace = app.add_subcommand("trace", "print the execution trace of one run");
  add_program_flags(trace);

  auto* naturalize = app.add_subcommand("naturalize", "rule-based rationale for one run");
  add_program_flags(naturalize);
  naturalize->add_flag("--json", as_json, "print the rationale as JSON");

  auto* translate = app.add_subcommand("translate", "model-translated rationale for one run");
  add_program_flags(translate);
  translate->add_option("--question", question, "override the question text");
  translate->add_flag("--json", as_json, "print the rationale as JSON");

  auto* filter = app.add_subcommand("filter", "run the filters over a corpus");
  filter->add_option("--corpus", o.corpus, "corpus directory");
  filter->add_option("--report", report, "write decisions here instead of stdout");
  filter->add_option("--max-trace-lines", o.max_trace_lines, "reject traces longer than this");
  filter->add_option("--workers", o.workers, "parallel workers");

  auto* build = app.add_subcommand("build", "build a dataset from a corpus");
  build->add_option("--corpus", o.corpus, "corpus directory");
  build->add_option("--out", o.out, "output directory");
  add_pipeline_flags(build);

  auto* verify = app.add_subcommand("verify", "re-check an emitted dataset");
  verify->add_option("--dataset", dataset_path, "dataset JSONL")->required();
  verify->add_option("--report", report, "write reports here instead of stdout");

  auto* stats = app.add_subcommand("stats", "token statistics over a completions file");
  stats->add_option("--completions", completions, "JSONL of {text, finish_reason}")->required();
  stats->add_option("--max-tokens", max_tokens, "generation limit the completions were sampled with");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    std::string message = e.what();
    for (char& c : message) {
      if (c == '\n') c = ' ';
    }
    err << "error: usage: " << message << '\n';
    return kExitUsage;
  }

  try {
    PipelineConfig config = effective_config(o);
    if (*trace) return cmd_trace(config, program, input, out, err);
    if (*naturalize) return cmd_naturalize(config, program, input, as_json, out);
    if (*translate) return cmd_translate(config, program, input, question, as_json, out);
    if (*filter) return cmd_filter(config, report, out);
    if (*build) return cmd_build(config, out);
    if (*verify) return cmd_verify(config, dataset_path, report, out, err);
    if (*stats) return cmd_stats(config, completions, max_tokens, out);
    err << "error: usage: no subcommand\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::string detail = e.detail();
    for (char& c : detail) {
      if (c == '\n') c = ' ';
    }
    err << "error: " << e.code() << ": " << detail << '\n';
    if (is_config_code(e.code())) return kExitConfig;
    if (is_usage_code(e.code())) return kExitUsage;
    return kExitPipeline;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << '\n';
    return kExitPipeline;
  }
}

}  // namespace tracecot::cli
