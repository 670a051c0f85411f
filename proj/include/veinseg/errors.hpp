#pragma once

#include <stdexcept>
#include <string>

namespace veinseg {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes, dimensions or channel counts.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

// A caller-supplied value violates an operation's precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed, truncated, corrupted or unsupported checkpoint files.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Training produced a NaN/Inf loss.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace veinseg
