#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace synco {

// Base for every error raised by the library. CLI code maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ZeroVectorError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class BatchTooLarge : public Error {
 public:
  using Error::Error;
};

class EmptyHardestSet : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class MissingLabels : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class DegenerateClass : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Raised when a loss or gradient turns non-finite during training.
class NumericAbort : public Error {
 public:
  NumericAbort(const std::string& what, std::string dump_path = {})
      : Error(what), dump_path_(std::move(dump_path)) {}
  const std::string& dump_path() const noexcept { return dump_path_; }
  void set_dump_path(std::string p) { dump_path_ = std::move(p); }

 private:
  std::string dump_path_;
};

}  // namespace synco
