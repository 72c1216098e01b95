#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracecot/runtime/trace.hpp"

namespace tracecot::dataset {

struct RecordVerification {
  std::string record_id;
  bool output_correct = false;
  bool grounded = false;
  nlohmann::ordered_json violations = nlohmann::ordered_json::array();
  std::string detail;  // first problem found, empty when the record is fine

  bool ok() const { return output_correct && grounded && detail.empty(); }
};

nlohmann::ordered_json to_json(const RecordVerification& v);

// Re-executes each record's code on its input and checks the stored output,
// the completion and (for rationales) groundedness against the fresh trace.
RecordVerification verify_record(const nlohmann::ordered_json& row,
                                 const runtime::ExecutionLimits& limits = {});

std::vector<RecordVerification> verify_dataset(const std::string& path,
                                               const runtime::ExecutionLimits& limits = {});

}  // namespace tracecot::dataset
