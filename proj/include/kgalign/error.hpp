#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kgalign {

/// Error categories. The CLI maps each one to a distinct exit code.
enum class ErrorCode : int {
  Io = 2,
  Parse = 3,
  Structural = 4,
  Argument = 5,
  Config = 6,
  Shape = 7,
  Numerical = 8,
  Internal = 9,  // anything not raised by the library itself
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return "E_IO";
    case ErrorCode::Parse: return "E_PARSE";
    case ErrorCode::Structural: return "E_STRUCTURAL";
    case ErrorCode::Argument: return "E_ARGUMENT";
    case ErrorCode::Config: return "E_CONFIG";
    case ErrorCode::Shape: return "E_SHAPE";
    case ErrorCode::Numerical: return "E_NUMERICAL";
    case ErrorCode::Internal: return "E_INTERNAL";
  }
  return "E_UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define KGALIGN_DEFINE_ERROR(Name, Code)                                \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what) : Error(ErrorCode::Code, what) {} \
  };

KGALIGN_DEFINE_ERROR(IoError, Io)
KGALIGN_DEFINE_ERROR(ParseError, Parse)
KGALIGN_DEFINE_ERROR(StructuralError, Structural)
KGALIGN_DEFINE_ERROR(ArgumentError, Argument)
KGALIGN_DEFINE_ERROR(ConfigError, Config)
KGALIGN_DEFINE_ERROR(ShapeError, Shape)
KGALIGN_DEFINE_ERROR(NumericalError, Numerical)

#undef KGALIGN_DEFINE_ERROR

}  // namespace kgalign
