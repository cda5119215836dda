#pragma once

#include <stdexcept>
#include <string>

namespace codecause {

// Exit-code classes used by the CLI: usage 1, data 2, upstream 3.
enum class ErrorKind { Usage = 1, Data = 2, Upstream = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

/// Network, auth or endpoint failures. `retriable` is false for cache misses in replay mode.
class UpstreamError : public Error {
 public:
  UpstreamError(const std::string& what, bool retriable)
      : Error(ErrorKind::Upstream, what), retriable_(retriable) {}
  bool retriable() const noexcept { return retriable_; }

 private:
  bool retriable_;
};

}  // namespace codecause
