#pragma once

#include <stdexcept>
#include <string>

namespace tislf {

/// Broad failure class, used by the CLI to pick an exit code.
enum class ErrorKind { Config, Input, Internal };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class InputError : public Error {
public:
  explicit InputError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

class InputNotFound : public InputError {
public:
  using InputError::InputError;
};

class EmptySequence : public InputNotFound {
public:
  using InputNotFound::InputNotFound;
};

class SequenceOrderError : public InputError {
public:
  using InputError::InputError;
};

class FrameDecodeError : public InputError {
public:
  FrameDecodeError(std::string filename, const std::string& why)
      : InputError("cannot decode '" + filename + "': " + why), filename_(std::move(filename)) {}
  const std::string& filename() const noexcept { return filename_; }

private:
  std::string filename_;
};

class InvalidResizeError : public InputError {
public:
  using InputError::InputError;
};

class ImageTooSmall : public InputError {
public:
  using InputError::InputError;
};

class SequenceTooShort : public InputError {
public:
  using InputError::InputError;
};

class ScriptError : public InputError {
public:
  using InputError::InputError;
};

class InternalError : public Error {
public:
  explicit InternalError(const std::string& what) : Error(ErrorKind::Internal, what) {}
};

}  // namespace tislf
