#pragma once

#include <stdexcept>
#include <string>

namespace osr {

/// Coarse failure class; the CLI maps these onto exit codes 1, 2 and 3.
enum class ErrorCategory { validation, runtime, io };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, std::string code, const std::string& what)
      : std::runtime_error(what), category_(category), code_(std::move(code)) {}

  ErrorCategory category() const noexcept { return category_; }
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorCategory category_;
  std::string code_;
};

#define OSR_DEFINE_ERROR(Name, Category, Code)                                  \
  class Name : public Error {                                                   \
   public:                                                                      \
    explicit Name(const std::string& what) : Error(ErrorCategory::Category, Code, what) {} \
  };

OSR_DEFINE_ERROR(InvalidArgument, validation, "invalid_argument")
OSR_DEFINE_ERROR(DimensionMismatch, validation, "dimension_mismatch")
OSR_DEFINE_ERROR(NonFiniteValue, runtime, "non_finite")
OSR_DEFINE_ERROR(Divergence, runtime, "divergence")
OSR_DEFINE_ERROR(DegenerateSample, runtime, "degenerate_sample")
OSR_DEFINE_ERROR(NonConvergence, runtime, "non_convergence")
OSR_DEFINE_ERROR(EmptyClass, runtime, "empty_class")
OSR_DEFINE_ERROR(IoError, io, "io_error")
OSR_DEFINE_ERROR(BadMagic, io, "bad_magic")
OSR_DEFINE_ERROR(TruncatedPayload, io, "truncated_payload")
OSR_DEFINE_ERROR(DimensionOverflow, io, "dimension_overflow")
OSR_DEFINE_ERROR(VersionMismatch, io, "version_mismatch")

#undef OSR_DEFINE_ERROR

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace osr
