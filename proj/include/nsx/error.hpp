#pragma once

#include <stdexcept>
#include <string>

namespace nsx {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Syntax or type problem in a constraint file. Carries a 1-based source position.
struct ParseError : Error {
    ParseError(const std::string& msg, int line_, int col_)
        : Error(std::to_string(line_) + ":" + std::to_string(col_) + ": " + msg),
          line(line_), col(col_) {}
    int line;
    int col;
};

// Malformed external file (model, dataset, report).
struct FileFormatError : Error {
    using Error::Error;
};

// A solver was asked something outside its supported fragment, or a
// fallback could not be applied (e.g. non-enumerable domain).
struct SolveError : Error {
    using Error::Error;
};

// Evaluation under an assignment failed structurally (unbound variable,
// kind mismatch). Note: division by zero is not an EvalError; it makes the
// enclosing constraint evaluate to false.
struct EvalError : Error {
    using Error::Error;
};

} // namespace nsx
