#include "tracecot/dataset/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "tracecot/common/error.hpp"
#include "tracecot/common/hash.hpp"
#include "tracecot/common/template.hpp"
#include "tracecot/naturalizer/naturalizer.hpp"
#include "tracecot/runtime/interpreter.hpp"
#include "tracecot/verifier/verifier.hpp"

namespace tracecot::dataset {

using nlohmann::ordered_json;

namespace {

constexpr std::string_view kQuestionHeader =
    "You are given a question that requires some input and output variables as follows:\n"
    "\n"
    "{question}\n"
    "\n"
    "----\n"
    "\n";

constexpr std::string_view kOutputPredictionBody =
    "You are also given a solution code that solves the question:\n"
    "\n"
    "{code}\n"
    "\n"
    "----\n"
    "\n"
    "Given the following input:\n"
    "\n"
    "{input}\n"
    "\n"
    "Predict the output of the question by tracing the given solution code step by step to reach "
    "the final output.";

// "of by tracing" is how the template reads in the original; kept verbatim.
constexpr std::string_view kRawTraceBody =
    "Here is the solution code that solves the question:\n"
    "\n"
    "```\n"
    "{code}\n"
    "```\n"
    "\n"
    "Given the following input:\n"
    "\n"
    "{input}\n"
    "\n"
    "Generate a step-by-step execution trace of by tracing the given solution code step by step to "
    "reach the final output.";

constexpr std::string_view kCodeGenBody = "Generate a solution code that solves the question.";

}  // namespace

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::Ours: return "ours";
    case Variant::RawTrace: return "raw_trace";
    case Variant::CodeGen: return "code_gen";
    case Variant::CodeioStyle: return "codeio_style";
  }
  return "ours";
}

Variant variant_from_string(std::string_view text) {
  for (Variant v : {Variant::Ours, Variant::RawTrace, Variant::CodeGen, Variant::CodeioStyle}) {
    if (to_string(v) == text) return v;
  }
  throw Error("invalid_variant", "unknown variant '" + std::string(text) + "'");
}

std::string record_id_for(std::string_view question, std::string_view code, std::string_view input_repr) {
  std::string material;
  material.reserve(question.size() + code.size() + input_repr.size() + 2);
  material.append(question).push_back('\x1f');
  material.append(code).push_back('\x1f');
  material.append(input_repr);
  return sha256_hex(material);
}

DatasetRecord build_record(std::string_view question, const lang::SourceProgram& program,
                           const ordered_json& input, const runtime::ExecutionTrace& trace,
                           std::optional<naturalizer::NlTrace> nl_trace, Variant variant) {
  if (!trace.completed()) throw Error("incomplete_trace", "records need a completed run");
  DatasetRecord record;
  record.variant = variant;
  record.question = std::string(question);
  record.code = program.source_text();
  record.line_offset = program.line_offset();
  record.input_json = input;
  record.input_repr = runtime::repr_binding(runtime::binding_from_json(input));
  record.output_repr = trace.return_repr();
  record.trace_text = runtime::render_trace(trace);
  record.nl_trace = std::move(nl_trace);
  record.record_id = record_id_for(record.question, record.code, record.input_repr);

  bool needs_nl = variant == Variant::Ours || variant == Variant::CodeioStyle;
  if (needs_nl && !record.nl_trace) {
    throw Error("variant_field_missing", std::string(to_string(variant)) + " records need a rationale");
  }
  if (variant == Variant::RawTrace && record.trace_text.empty()) {
    throw Error("variant_field_missing", "raw_trace records need a trace");
  }
  if (variant == Variant::CodeGen && record.code.empty()) {
    throw Error("variant_field_missing", "code_gen records need code");
  }
  return record;
}

std::string render_user_prompt(const DatasetRecord& record) {
  std::string tmpl(kQuestionHeader);
  switch (record.variant) {
    case Variant::Ours:
    case Variant::CodeioStyle: tmpl += kOutputPredictionBody; break;
    case Variant::RawTrace: tmpl += kRawTraceBody; break;
    case Variant::CodeGen: tmpl += kCodeGenBody; break;
  }
  return fill_slots(tmpl, {{"question", record.question},
                           {"code", record.code},
                           {"input", record.input_repr}});
}

std::string render_completion(const DatasetRecord& record) {
  switch (record.variant) {
    case Variant::Ours:
    case Variant::CodeioStyle: return naturalizer::completion_text(*record.nl_trace);
    case Variant::RawTrace: return record.trace_text;
    case Variant::CodeGen: return record.code;
  }
  return "";
}

ordered_json record_json(const DatasetRecord& record) {
  ordered_json meta = {{"question", record.question},
                       {"input", record.input_repr},
                       {"output", record.output_repr},
                       {"code", record.code},
                       {"line_offset", record.line_offset},
                       {"input_json", record.input_json}};
  if (record.nl_trace) meta["nl_trace"] = naturalizer::to_json(*record.nl_trace);
  return {{"record_id", record.record_id},
          {"variant", to_string(record.variant)},
          {"prompt", render_user_prompt(record)},
          {"completion", render_completion(record)},
          {"meta", meta}};
}

ordered_json manifest_json(const Manifest& manifest) {
  return {{"counts", manifest.counts},
          {"rejections", manifest.rejections},
          {"submitted", manifest.submitted},
          {"emitted", manifest.emitted},
          {"corpus_hash", manifest.corpus_hash},
          {"config", manifest.config}};
}

std::string manifest_path_for(const std::string& jsonl_path) {
  std::string base = jsonl_path;
  constexpr std::string_view kExt = ".jsonl";
  if (base.size() >= kExt.size() && base.compare(base.size() - kExt.size(), kExt.size(), kExt) == 0) {
    base.resize(base.size() - kExt.size());
  }
  return base + ".manifest.json";
}

namespace {

void confirm_sound(const DatasetRecord& record, const runtime::ExecutionLimits& limits) {
  auto fail = [&](const std::string& why) {
    throw Error("unsound_record", record.record_id + ": " + why);
  };
  lang::SourceProgram program = lang::parse(record.code, record.record_id, record.line_offset);
  runtime::ExecutionResult result =
      runtime::execute(program, runtime::binding_from_json(record.input_json), limits);
  if (!result.trace.completed()) fail("re-execution did not complete");
  if (result.trace.return_repr() != record.output_repr) {
    fail("re-execution returned " + result.trace.return_repr() + ", record says " + record.output_repr);
  }
  if (!verifier::check_output_correctness(*record.nl_trace, record.output_repr)) {
    fail("rationale does not reach " + record.output_repr);
  }
}

void write_file(const std::string& path, const std::string& content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io_error", "cannot open " + path + " for writing");
  out << content;
  out.close();
  if (!out) throw Error("io_error", "failed writing " + path);
}

}  // namespace

Manifest emit_jsonl(std::vector<DatasetRecord> records, const std::string& path,
                    const EmitOptions& options) {
  if (records.empty()) throw Error("empty_corpus", "no records to emit");
  std::stable_sort(records.begin(), records.end(), [](const DatasetRecord& a, const DatasetRecord& b) {
    if (a.record_id != b.record_id) return a.record_id < b.record_id;
    return a.variant < b.variant;
  });

  Manifest manifest;
  manifest.rejections = options.prior_rejections;
  manifest.config = options.config;
  manifest.corpus_hash = options.corpus_hash;
  std::size_t prior = 0;
  for (const auto& [rule, count] : options.prior_rejections) prior += count;
  manifest.submitted = prior + records.size();

  std::string text;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const DatasetRecord& record = records[i];
    if (i > 0 && records[i - 1].record_id == record.record_id && records[i - 1].variant == record.variant) {
      ++manifest.rejections["duplicate_record"];
      continue;
    }
    if (record.variant == Variant::Ours) confirm_sound(record, options.limits);
    text += record_json(record).dump() + "\n";
    ++manifest.counts[std::string(to_string(record.variant))];
    ++manifest.emitted;
  }

  write_file(path, text);
  write_file(manifest_path_for(path), manifest_json(manifest).dump(2) + "\n");
  return manifest;
}

std::vector<ordered_json> read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot open " + path);
  std::vector<ordered_json> rows;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    ordered_json row = ordered_json::parse(line, nullptr, false);
    if (row.is_discarded()) {
      throw Error("malformed_dataset", path + ":" + std::to_string(number) + ": not valid JSON");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace tracecot::dataset
