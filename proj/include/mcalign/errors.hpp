#pragma once

#include <stdexcept>
#include <string>

namespace mcalign {

// Every library failure derives from Error so callers (and the CLI) can
// report a stable machine-readable kind alongside the message.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define MCALIGN_DEFINE_ERROR(Name, Kind)                                 \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what) : Error(Kind, what) {}        \
  };

MCALIGN_DEFINE_ERROR(DimensionError, "dimension")
MCALIGN_DEFINE_ERROR(ValidationError, "validation")
MCALIGN_DEFINE_ERROR(ConvergenceError, "convergence")
MCALIGN_DEFINE_ERROR(DomainError, "domain")
MCALIGN_DEFINE_ERROR(NumericalError, "numerical")
MCALIGN_DEFINE_ERROR(PreconditionError, "precondition")
MCALIGN_DEFINE_ERROR(RecoveryError, "recovery")
MCALIGN_DEFINE_ERROR(ThresholdMismatchError, "threshold-mismatch")
MCALIGN_DEFINE_ERROR(DegenerateThresholdError, "degenerate-threshold")
MCALIGN_DEFINE_ERROR(GenerationError, "generation")
MCALIGN_DEFINE_ERROR(InternalError, "internal")

#undef MCALIGN_DEFINE_ERROR

// Configuration problems carry the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error("config", what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace mcalign
