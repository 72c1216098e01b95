#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracecot/dataset/dataset.hpp"
#include "tracecot/filters/filters.hpp"
#include "tracecot/llm/gateway.hpp"

namespace tracecot::dataset {

// One directory per instance: question.txt, solution.py, inputs.jsonl and an
// optional meta.json ({"line_offset": n}).
struct Instance {
  std::string id;
  std::string question;
  std::string source;
  int line_offset = 0;
  std::vector<nlohmann::ordered_json> inputs;
};

struct Corpus {
  std::string name;
  std::vector<Instance> instances;
  std::string content_hash;
};

// Instances are sorted by directory name. Errors: "corpus_not_found", "corpus_format".
Corpus load_corpus(const std::string& dir);

enum class RationaleMode { RuleBased, Llm };

struct PipelineOptions {
  filters::FilterConfig filters;
  Variant variant = Variant::Ours;
  RationaleMode mode = RationaleMode::RuleBased;
  std::size_t workers = 1;
  llm::Gateway* gateway = nullptr;  // required for RationaleMode::Llm
  std::string model_name;
  llm::SamplingConfig sampling;
  nlohmann::ordered_json extra_body = nlohmann::ordered_json::object();
};

struct UnitDecision {
  std::string program_id;  // "<instance>#<input index>"
  filters::FilterDecision decision;
};

struct BuildResult {
  std::vector<DatasetRecord> records;
  std::vector<UnitDecision> decisions;  // every decision, accepted ones included
  std::map<std::string, std::size_t> rejections;
  std::size_t submitted = 0;
};

// Runs parse, pre-filter, execution, post-filter, rationale and record
// construction for every (instance, input) pair. Output order is independent
// of the worker count. Throws Error("config_error") for unusable options.
BuildResult build_corpus(const Corpus& corpus, const PipelineOptions& options);

nlohmann::ordered_json options_snapshot(const PipelineOptions& options);

}  // namespace tracecot::dataset
