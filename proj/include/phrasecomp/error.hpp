#pragma once

#include <stdexcept>
#include <string>

namespace phrasecomp {

// Base for every error raised by the library. Callers that only need a
// diagnostic can catch this and print what().
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file or stream.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Argument or shape violating an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A vector with zero Euclidean norm reached an operation that divides by it.
class ZeroNormError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace phrasecomp
