#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>

#include "tracecot/dataset/dataset.hpp"
#include "tracecot/dataset/pipeline.hpp"
#include "tracecot/filters/filters.hpp"
#include "tracecot/llm/gateway.hpp"

namespace tracecot::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPipeline = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;

// Everything a subcommand may need. Loaded from a JSON config file, then
// overridden by flags. The API key only ever comes from the environment.
struct PipelineConfig {
  std::string corpus_dir;
  std::string output_dir;
  filters::FilterConfig filters;
  llm::SamplingConfig sampling;
  dataset::Variant variant = dataset::Variant::Ours;
  dataset::RationaleMode mode = dataset::RationaleMode::RuleBased;
  llm::GatewayConfig gateway;
  std::string model_name;
  nlohmann::ordered_json extra_body = nlohmann::ordered_json::object();
  std::size_t workers = 1;
};

// Reads a config document. Errors: "config_not_found", "config_invalid".
PipelineConfig load_config(const std::string& path);

// Applies the keys present in `doc` on top of `config`.
void apply_config(PipelineConfig& config, const nlohmann::ordered_json& doc);

// Exit codes: 0 success, 1 pipeline failure, 2 usage error, 3 config error.
// Failures print one line "error: <code>: <detail>" on `err`.
int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tracecot::cli
