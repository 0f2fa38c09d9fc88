// Copyright 2026 The MMSR Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mmsr {

// Error taxonomy mirrors the CLI exit codes: usage = 1, data = 2, numeric = 3.
enum class ErrorKind { usage = 1, data = 2, numeric = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& m) : Error(ErrorKind::usage, m) {}
};

struct DataError : Error {
  explicit DataError(const std::string& m) : Error(ErrorKind::data, m) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& m) : Error(ErrorKind::numeric, m) {}
};

// Shape/dimension misuse is an API usage error.
struct ShapeError : UsageError {
  explicit ShapeError(const std::string& m) : UsageError(m) {}
};

}  // namespace mmsr
