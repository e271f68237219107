#pragma once

#include <stdexcept>
#include <string>

namespace emhd {

/// Base of every error raised by the library. `kind()` is the stable
/// machine-readable name written into error JSON by the CLI.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "Error"; }
};

#define EMHD_DEFINE_ERROR(Name)                                 \
  class Name : public Error {                                   \
   public:                                                      \
    using Error::Error;                                         \
    const char* kind() const noexcept override { return #Name; } \
  }

/// Exponent argument of a Fourier multiplier exceeds the overflow threshold.
EMHD_DEFINE_ERROR(AmplificationOverflow);
EMHD_DEFINE_ERROR(TruncationOverflow);
EMHD_DEFINE_ERROR(ConfigError);
EMHD_DEFINE_ERROR(NoContraction);
EMHD_DEFINE_ERROR(StepRejected);
EMHD_DEFINE_ERROR(MonotonicityViolation);
EMHD_DEFINE_ERROR(FormatError);

#undef EMHD_DEFINE_ERROR

/// Largest exponent argument accepted before e^x is considered an overflow.
inline constexpr double kMaxExponent = 700.0;

}  // namespace emhd
