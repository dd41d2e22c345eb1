#pragma once

#include <stdexcept>
#include <string>

namespace acgan {

// Base of every error raised by the library. kind() is a stable tag used by
// the CLI for single-line, machine-parsable diagnostics.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

#define ACGAN_DEFINE_ERROR(Name, tag)                          \
  class Name : public Error {                                  \
   public:                                                     \
    using Error::Error;                                        \
    const char* kind() const noexcept override { return tag; } \
  }

ACGAN_DEFINE_ERROR(DimensionError, "dimension");
ACGAN_DEFINE_ERROR(ParameterError, "parameter");
ACGAN_DEFINE_ERROR(NumericError, "non-finite");
ACGAN_DEFINE_ERROR(IngestionError, "ingestion");
ACGAN_DEFINE_ERROR(OrderingError, "ordering");
ACGAN_DEFINE_ERROR(DomainError, "domain");
ACGAN_DEFINE_ERROR(ConfigError, "config");
ACGAN_DEFINE_ERROR(RangeError, "range");
ACGAN_DEFINE_ERROR(ModeError, "mode");
ACGAN_DEFINE_ERROR(CorruptionError, "corruption");
ACGAN_DEFINE_ERROR(VersionError, "version");
ACGAN_DEFINE_ERROR(UndefinedStatistic, "undefined-statistic");
ACGAN_DEFINE_ERROR(InsufficientData, "insufficient-data");
ACGAN_DEFINE_ERROR(DegenerateRisk, "degenerate-risk");
ACGAN_DEFINE_ERROR(TrainingAborted, "training-aborted");
ACGAN_DEFINE_ERROR(IoError, "io");
ACGAN_DEFINE_ERROR(AlignmentError, "alignment");

#undef ACGAN_DEFINE_ERROR

}  // namespace acgan
