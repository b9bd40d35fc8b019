#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fitted {

// Root of every error raised by the toolkit. The CLI catches this type and
// prefixes the message with the failing stage.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;

  // Name of the concrete error type, e.g. "OverlapError".
  virtual const char* kind() const noexcept { return "Error"; }
};

#define FITTED_DEFINE_ERROR(Name)                                       \
  class Name : public Error {                                           \
   public:                                                              \
    using Error::Error;                                                 \
    const char* kind() const noexcept override { return #Name; }        \
  }

// class_spaces
FITTED_DEFINE_ERROR(OverlapError);
FITTED_DEFINE_ERROR(CoverageError);
FITTED_DEFINE_ERROR(EmptyBlockError);
FITTED_DEFINE_ERROR(OddClassCountError);
FITTED_DEFINE_ERROR(PairingError);
FITTED_DEFINE_ERROR(UnknownClassError);

// trainer
FITTED_DEFINE_ERROR(ConfigError);
FITTED_DEFINE_ERROR(DegenerateDataError);
FITTED_DEFINE_ERROR(DimensionMismatchError);

// rectifier
FITTED_DEFINE_ERROR(ShapeMismatchError);
FITTED_DEFINE_ERROR(EmptyMemberListError);
FITTED_DEFINE_ERROR(SpecMismatchError);

// scl_eval
FITTED_DEFINE_ERROR(ArityMismatchError);
FITTED_DEFINE_ERROR(InfeasibleConstraintError);
FITTED_DEFINE_ERROR(EmptyPartDataError);

// ood_metrics
FITTED_DEFINE_ERROR(EmptyInputError);
FITTED_DEFINE_ERROR(OutOfRangeError);

// io
FITTED_DEFINE_ERROR(SchemaError);

#undef FITTED_DEFINE_ERROR

// A malformed line in a text input. `line` is 1-based and counts the header.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }
  const char* kind() const noexcept override { return "ParseError"; }

 private:
  std::size_t line_;
};

// An error annotated with the pipeline stage it escaped from. `inner_kind`
// keeps the original error type name.
class StageError : public Error {
 public:
  StageError(std::string stage, std::string inner_kind, const std::string& what)
      : Error(stage + ": " + inner_kind + ": " + what),
        stage_(std::move(stage)),
        inner_kind_(std::move(inner_kind)) {}

  const std::string& stage() const noexcept { return stage_; }
  const std::string& inner_kind() const noexcept { return inner_kind_; }
  const char* kind() const noexcept override { return "StageError"; }

 private:
  std::string stage_;
  std::string inner_kind_;
};

}  // namespace fitted
