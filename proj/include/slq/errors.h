#pragma once

#include <stdexcept>
#include <string>

namespace slq {

/// Base of every error raised by the library. `kind()` is a stable short tag
/// used by the command-line front end and in diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define SLQ_DEFINE_ERROR(Name)                                         \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(#Name, what) {}     \
  }

// Malformed numeric input: NaN/Inf entries, wrong shapes, broken symmetry.
SLQ_DEFINE_ERROR(InvalidInput);
// The vectorized Lyapunov operator is numerically singular.
SLQ_DEFINE_ERROR(SingularOperator);
// A gain that was required to be a mean-square stabilizer is not one.
SLQ_DEFINE_ERROR(NotStabilizing);
// The closed-form constants cannot be evaluated for this model (B = 0).
SLQ_DEFINE_ERROR(UnsupportedModel);
SLQ_DEFINE_ERROR(StepCollapse);
SLQ_DEFINE_ERROR(MaxIterExceeded);
// A simulated path left the representable range.
SLQ_DEFINE_ERROR(Overflow);
SLQ_DEFINE_ERROR(ParseError);
SLQ_DEFINE_ERROR(ValidationError);

#undef SLQ_DEFINE_ERROR

}  // namespace slq
