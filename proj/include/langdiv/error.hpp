#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace langdiv {

enum class ErrorCode {
  kParseFailure,
  kEmptyCorpus,
  kBalanceFailure,
  kNetwork,
  kVocabularyUnderflow,
  kEmptyVocabulary,
  kUnknownToken,
  kFormat,
  kInsufficientAnchors,
  kNumeric,
  kEmptyEvaluation,
  kConfiguration,
  kDegenerateVariance,
  kConsistency,
  kRunFailure,
  kIo,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-readable code; the
// CLI maps these onto exit statuses and structured messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace langdiv
