#pragma once

#include <stdexcept>
#include <string>

namespace loadmix {

// Every library failure derives from Error; the category maps onto the CLI
// exit codes (1 usage, 2 data, 3 numerical).
enum class ErrorKind { usage = 1, data = 2, numerical = 3 };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

class DataError : public Error {
public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class ParseError : public DataError {
public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class DimensionError : public DataError {
public:
  using DataError::DataError;
};

class NumericalError : public Error {
public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

} // namespace loadmix
