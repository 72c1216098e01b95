#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracecot/lang/program.hpp"
#include "tracecot/naturalizer/nl_trace.hpp"
#include "tracecot/runtime/trace.hpp"

namespace tracecot::dataset {

enum class Variant { Ours, RawTrace, CodeGen, CodeioStyle };

std::string_view to_string(Variant variant);
Variant variant_from_string(std::string_view text);  // Error("invalid_variant")

struct DatasetRecord {
  std::string record_id;
  Variant variant = Variant::Ours;
  std::string question;
  std::string code;
  int line_offset = 0;
  std::string input_repr;
  nlohmann::ordered_json input_json;
  std::string output_repr;
  std::string trace_text;
  std::optional<naturalizer::NlTrace> nl_trace;
};

// Hash of question, code and input; the same instance gets the same id in every variant.
std::string record_id_for(std::string_view question, std::string_view code, std::string_view input_repr);

// Throws Error("incomplete_trace") for a failed run and
// Error("variant_field_missing") when the variant's required field is absent.
DatasetRecord build_record(std::string_view question, const lang::SourceProgram& program,
                           const nlohmann::ordered_json& input, const runtime::ExecutionTrace& trace,
                           std::optional<naturalizer::NlTrace> nl_trace, Variant variant);

std::string render_user_prompt(const DatasetRecord& record);
std::string render_completion(const DatasetRecord& record);

nlohmann::ordered_json record_json(const DatasetRecord& record);

struct Manifest {
  std::map<std::string, std::size_t> counts;      // per variant
  std::map<std::string, std::size_t> rejections;  // per rule id
  std::size_t submitted = 0;
  std::size_t emitted = 0;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::string corpus_hash;
};

nlohmann::ordered_json manifest_json(const Manifest& manifest);

struct EmitOptions {
  std::map<std::string, std::size_t> prior_rejections;  // from filtering
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::string corpus_hash;
  runtime::ExecutionLimits limits;  // for re-executing records before they are written
};

// "<dir>/<name>.jsonl" -> "<dir>/<name>.manifest.json"
std::string manifest_path_for(const std::string& jsonl_path);

// Sorts by record id, drops repeated ids (rule "duplicate_record"), re-runs
// every ours record to confirm its output, then writes the JSONL file and its
// manifest. Errors: "empty_corpus", "unsound_record", "io_error".
Manifest emit_jsonl(std::vector<DatasetRecord> records, const std::string& path,
                    const EmitOptions& options = {});

// Reads back a JSONL file written by emit_jsonl.
std::vector<nlohmann::ordered_json> read_jsonl(const std::string& path);

}  // namespace tracecot::dataset
