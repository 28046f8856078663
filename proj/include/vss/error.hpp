#pragma once

#include <exception>
#include <stdexcept>
#include <string>

namespace vss {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file; the message names the file and line or byte offset.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Out-of-range parameter. `param()` is the offending name, e.g. "idw.p".
class ParameterError : public Error {
 public:
  ParameterError(std::string param, const std::string& what)
      : Error(param + ": " + what), param_(std::move(param)) {}
  const std::string& param() const { return param_; }

 private:
  std::string param_;
};

/// Raised when normalization sees no foreground pixel.
class EmptySceneError : public Error {
 public:
  EmptySceneError() : Error("empty scene: no foreground pixels") {}
};

/// Pipeline failure tagged with the stage that raised it. `cause()` holds
/// the original exception.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what, std::exception_ptr cause = nullptr)
      : Error(stage + ": " + what), stage_(std::move(stage)), cause_(std::move(cause)) {}
  const std::string& stage() const { return stage_; }
  const std::exception_ptr& cause() const { return cause_; }

 private:
  std::string stage_;
  std::exception_ptr cause_;
};

}  // namespace vss
