#pragma once

#include <stdexcept>
#include <string>

namespace mfa {

// Operand shapes do not agree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the operation's domain (empty input, bad range, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Token id outside the vocabulary.
class VocabularyError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Malformed file content. Carries the byte offset or line where parsing failed.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// NaN/Inf encountered where finite values are required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A cached trace or checkpoint does not belong to the parameters it is used with.
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mfa
