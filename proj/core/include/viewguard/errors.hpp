#pragma once

#include <stdexcept>
#include <string>

namespace viewguard {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: policy file, SQL text, template JSON, replay record.
class ParseError : public Error {
 public:
  using Error::Error;
};

class SyntaxError : public ParseError {
 public:
  using ParseError::ParseError;
};

class UnsupportedFeature : public Error {
 public:
  using Error::Error;
};

/// Unknown table, column or parameter, or a type mismatch between operands.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

class NonBasicView : public Error {
 public:
  using Error::Error;
};

class UnboundParameter : public Error {
 public:
  using Error::Error;
};

class NotSplittable : public Error {
 public:
  using Error::Error;
};

class SolverSpawnError : public Error {
 public:
  using Error::Error;
};

class SolverIndecision : public Error {
 public:
  using Error::Error;
};

class NoTemplate : public Error {
 public:
  using Error::Error;
};

class UnverifiedTemplate : public Error {
 public:
  using Error::Error;
};

class SessionClosed : public Error {
 public:
  using Error::Error;
};

}  // namespace viewguard
