#pragma once

#include <stdexcept>
#include <string>

namespace propspan {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Input text did not follow the expected file format.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A caller violated a documented precondition (shapes, lengths, ranges of arguments).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A character offset fell outside of its article.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// A span could not be mapped onto tokens.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// Configuration validation failed; the message lists every violated field.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace propspan
