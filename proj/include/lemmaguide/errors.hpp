#pragma once

#include <stdexcept>
#include <string>

namespace lemmaguide {

enum class ErrorCode {
  budget_exhausted,
  embedding_unsafe,
  no_top_level_colon,
  missing_lemma_proof,
  binder_collision,
  precondition,
  missing_binding,
  endpoint_unavailable,
  response_malformed,
  guidance_unavailable,
  transport_error,
  config_error,
  dataset_error,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::budget_exhausted: return "budget-exhausted";
    case ErrorCode::embedding_unsafe: return "embedding-unsafe";
    case ErrorCode::no_top_level_colon: return "no-top-level-colon";
    case ErrorCode::missing_lemma_proof: return "missing-lemma-proof";
    case ErrorCode::binder_collision: return "collision";
    case ErrorCode::precondition: return "precondition-violation";
    case ErrorCode::missing_binding: return "missing-binding";
    case ErrorCode::endpoint_unavailable: return "endpoint-unavailable";
    case ErrorCode::response_malformed: return "response-malformed";
    case ErrorCode::guidance_unavailable: return "guidance-unavailable";
    case ErrorCode::transport_error: return "transport-error";
    case ErrorCode::config_error: return "config-error";
    case ErrorCode::dataset_error: return "dataset-error";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lemmaguide
