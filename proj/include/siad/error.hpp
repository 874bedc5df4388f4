#pragma once

#include <stdexcept>
#include <string>

namespace siad {

// Process exit codes used by the command-line harness.
enum class ErrorKind { Usage = 1, Data = 2, Numerical = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

// Rejected input: shapes, ranges, degenerate statistics.
class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what) : Error(ErrorKind::Data, what) {}
};

enum class FormatFault { MagicMismatch, VersionMismatch, Truncated, TrailingData, MalformedCsv, Io };

class FormatError : public Error {
 public:
  FormatError(FormatFault fault, const std::string& what) : Error(ErrorKind::Data, what), fault_(fault) {}
  FormatFault fault() const noexcept { return fault_; }

 private:
  FormatFault fault_;
};

// A numerical fault inside the selective-inference machinery (uncovered
// observation, piece-count cap, vanishing truncation mass).
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

}  // namespace siad
