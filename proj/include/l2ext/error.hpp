#pragma once

#include <stdexcept>
#include <string>

namespace l2ext {

/// Malformed input: bad shapes, unparsable scenario text, out-of-range
/// parameters. The CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Well-formed input that violates the mathematical hypothesis of an
/// analysis (non-torsion object, fat level set, ...). Exit code 3.
class PreconditionError : public std::runtime_error {
 public:
  explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace l2ext
