#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace tracecot {

// Error carrying a stable machine-readable code (e.g. "empty_corpus") next to
// a human-readable detail. The code is what callers and the CLI key off.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& detail = {})
      : std::runtime_error(detail.empty() ? code : code + ": " + detail),
        code_(std::move(code)),
        detail_(detail) {}

  const std::string& code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string code_;
  std::string detail_;
};

}  // namespace tracecot
