#pragma once

#include <stdexcept>
#include <string>

namespace mner {

/// Broad error families; the CLI maps them onto exit codes.
enum class ErrorKind {
  Input,      // malformed data, config or arguments
  Numerical,  // singular matrices, degenerate fits
  Validation  // oracle disagreement
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& what)
      : std::runtime_error(what), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Machine-readable error name, e.g. "SingularCovariance".
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

#define MNER_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what)                              \
        : Error(ErrorKind::Kind, #Name, #Name ": " + what) {}           \
  };

MNER_DEFINE_ERROR(InvalidInput, Input)
MNER_DEFINE_ERROR(InvalidConfig, Input)
MNER_DEFINE_ERROR(MissingColumn, Input)
MNER_DEFINE_ERROR(NonNumericCell, Input)
MNER_DEFINE_ERROR(EmptyArea, Input)
MNER_DEFINE_ERROR(DuplicateHeader, Input)
MNER_DEFINE_ERROR(SingularCovariance, Numerical)
MNER_DEFINE_ERROR(RankDeficientDesign, Numerical)
MNER_DEFINE_ERROR(InsufficientDegreesOfFreedom, Numerical)
MNER_DEFINE_ERROR(NonpositiveMSE, Numerical)
MNER_DEFINE_ERROR(OracleTooLarge, Input)
MNER_DEFINE_ERROR(StudyAborted, Numerical)

#undef MNER_DEFINE_ERROR

}  // namespace mner
