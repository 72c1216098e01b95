#include "tracecot/dataset/verify.hpp"

#include "tracecot/dataset/dataset.hpp"
#include "tracecot/naturalizer/naturalizer.hpp"
#include "tracecot/runtime/interpreter.hpp"
#include "tracecot/verifier/verifier.hpp"

namespace tracecot::dataset {

using nlohmann::ordered_json;

ordered_json to_json(const RecordVerification& v) {
  ordered_json out = {{"record_id", v.record_id},
                      {"output_correct", v.output_correct},
                      {"grounded", v.grounded},
                      {"violations", v.violations}};
  if (!v.detail.empty()) out["detail"] = v.detail;
  return out;
}

RecordVerification verify_record(const ordered_json& row, const runtime::ExecutionLimits& limits) {
  RecordVerification v;
  v.record_id = row.value("record_id", "");
  auto problem = [&](const std::string& what) {
    if (v.detail.empty()) v.detail = what;
  };
  try {
    const ordered_json& meta = row.at("meta");
    Variant variant = variant_from_string(row.at("variant").get<std::string>());
    std::string question = meta.at("question").get<std::string>();
    std::string code = meta.at("code").get<std::string>();
    std::string input = meta.at("input").get<std::string>();
    std::string output = meta.at("output").get<std::string>();
    std::string completion = row.at("completion").get<std::string>();

    if (record_id_for(question, code, input) != v.record_id) problem("record_id does not match content");

    lang::SourceProgram program = lang::parse(code, v.record_id, meta.value("line_offset", 0));
    runtime::Binding binding = runtime::binding_from_json(meta.at("input_json"));
    if (runtime::repr_binding(binding) != input) problem("input does not match input_json");
    runtime::ExecutionResult result = runtime::execute(program, binding, limits);
    if (!result.trace.completed()) {
      problem("re-execution did not complete");
      return v;
    }
    v.output_correct = result.trace.return_repr() == output;
    if (!v.output_correct) problem("stored output " + output + " but execution gives " + result.trace.return_repr());
    v.grounded = true;

    switch (variant) {
      case Variant::Ours:
      case Variant::CodeioStyle: {
        naturalizer::NlTrace nl = naturalizer::nl_trace_from_json(meta.at("nl_trace"));
        if (naturalizer::completion_text(nl) != completion) problem("completion does not match rationale");
        if (!verifier::check_output_correctness(nl, output)) {
          v.output_correct = false;
          problem("final answer does not state " + output);
        }
        if (variant == Variant::Ours) {
          auto report = verifier::check_groundedness(nl, result.trace, input, question);
          v.grounded = report.grounded();
          v.violations = verifier::to_json(report)["violations"];
          if (!v.grounded) problem("rationale has ungrounded literals");
        }
        break;
      }
      case Variant::RawTrace:
        if (runtime::render_trace(result.trace) != completion) problem("completion differs from a fresh trace");
        break;
      case Variant::CodeGen:
        if (completion != code) problem("completion differs from the code");
        break;
    }
  } catch (const Error& e) {
    problem(e.what());
  } catch (const nlohmann::ordered_json::exception& e) {
    problem(std::string("malformed record: ") + e.what());
  }
  return v;
}

std::vector<RecordVerification> verify_dataset(const std::string& path,
                                               const runtime::ExecutionLimits& limits) {
  std::vector<RecordVerification> out;
  for (const auto& row : read_jsonl(path)) out.push_back(verify_record(row, limits));
  return out;
}

}  // namespace tracecot::dataset
