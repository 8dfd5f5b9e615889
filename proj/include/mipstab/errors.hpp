#pragma once

#include <stdexcept>
#include <string>

namespace mipstab {

/// Machine-parseable error categories. Every Error carries one; the CLI maps
/// `usage` to exit code 1 and everything else to exit code 2.
enum class ErrorCode {
    bad_input,            // rejected value (non-finite score, bad flag value)
    structure_mismatch,   // membership/arity disagreement between two objects
    domain,               // argument outside the mathematical domain
    unfit,                // training data cannot produce a model (single class)
    stratification,       // stratified folds impossible for the class counts
    size,                 // a split or dataset side came out empty
    parse,                // malformed cell or line in an input file
    label,                // target column is not binary
    capability,           // explainer/model combination not supported
    cost_guard,           // request exceeds a hard cost cap
    degenerate_system,    // coalition regression system unsolvable
    matrix_domain,        // matrix not PSD / not a correlation matrix
    undefined_statistic,  // statistic undefined (zero variance input)
    training_aborted,     // elimination loop failed mid-way
    io,                   // file unreadable/unwritable
    usage,                // bad command line
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message),
          code_(code),
          message_(message) {}

    ErrorCode code() const { return code_; }
    /// The message without the code prefix that what() carries.
    const std::string& message() const { return message_; }

  private:
    ErrorCode code_;
    std::string message_;
};

}  // namespace mipstab
