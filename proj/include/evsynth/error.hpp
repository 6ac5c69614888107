#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace evsynth {

// Bad or unreadable input (files, CSV rows, config keys). The CLI maps this to exit 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A well-formed request that cannot be analysed (identifiability, sampler
// failure, unsplittable edge). The CLI maps this to exit 1.
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset parse failure carrying every offending line, not only the first.
class ParseError : public InputError {
 public:
  explicit ParseError(std::vector<std::string> problems)
      : InputError(join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
      if (!out.empty()) out += "; ";
      out += s;
    }
    return out;
  }

  std::vector<std::string> problems_;
};

}  // namespace evsynth
