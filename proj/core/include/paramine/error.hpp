#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace paramine {

// Everything thrown by the library derives from one of three categories.
// The CLI maps them to exit codes: DomainError -> 1, FormatError -> 2,
// ConfigError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Degenerate data or a violated mathematical precondition.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed or unreadable files.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Bad configuration (unknown key, unparsable value, invalid combination).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ZeroVectorError : public DomainError {
 public:
  ZeroVectorError() : DomainError("vector norm below 1e-12; cannot place on the unit sphere") {}
};

class DimensionMismatchError : public DomainError {
 public:
  explicit DimensionMismatchError(const std::string& what) : DomainError(what) {}
  DimensionMismatchError(std::size_t lhs, std::size_t rhs)
      : DomainError("dimension mismatch: " + std::to_string(lhs) + " vs " + std::to_string(rhs)) {}
};

class EmptyInputError : public DomainError {
 public:
  explicit EmptyInputError(const std::string& what) : DomainError(what) {}
};

class EmptyBatchError : public DomainError {
 public:
  EmptyBatchError() : DomainError("loss batch must contain at least one anchor/positive pair") {}
};

class DuplicateAnchorError : public DomainError {
 public:
  explicit DuplicateAnchorError(const std::string& anchor_id)
      : DomainError("anchor '" + anchor_id + "' appears twice in one mega-batch (malformed epoch shuffle)") {}
};

class MissingEmbeddingError : public DomainError {
 public:
  explicit MissingEmbeddingError(const std::string& id)
      : DomainError("no embedding for id '" + id + "'") {}
};

class IndexMismatchError : public DomainError {
 public:
  explicit IndexMismatchError(const std::string& what) : DomainError(what) {}
};

class DegenerateLabelsError : public DomainError {
 public:
  DegenerateLabelsError()
      : DomainError("threshold calibration needs at least one positive and one negative label") {}
};

class EmptyResultError : public DomainError {
 public:
  explicit EmptyResultError(const std::string& what) : DomainError(what) {}
};

class MalformedLineError : public FormatError {
 public:
  MalformedLineError(const std::string& file, std::size_t line_no, const std::string& why)
      : FormatError(file + ":" + std::to_string(line_no) + ": " + why), line_no_(line_no) {}
  std::size_t line_no() const { return line_no_; }

 private:
  std::size_t line_no_;
};

class UnknownIdError : public FormatError {
 public:
  UnknownIdError(const std::string& id, const std::string& where)
      : FormatError("unknown sentence id '" + id + "' referenced by " + where) {}
};

class DuplicateIdError : public FormatError {
 public:
  explicit DuplicateIdError(const std::string& id)
      : FormatError("duplicate sentence id '" + id + "'") {}
};

class IoError : public FormatError {
 public:
  explicit IoError(const std::string& what) : FormatError(what) {}
};

}  // namespace paramine
