#pragma once

#include <string_view>
#include <vector>

namespace tracecot::lang {

// Small reference programs bundled with the library; the CLI accepts their
// names wherever a program path is expected.
struct SampleProgram {
  std::string_view name;
  std::string_view question;
  std::string_view source;
  std::string_view example_input;  // JSON object
  int line_offset;
};

const std::vector<SampleProgram>& sample_programs();
const SampleProgram* find_sample(std::string_view name);

}  // namespace tracecot::lang
