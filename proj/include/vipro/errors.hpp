#pragma once

#include <stdexcept>
#include <string>

namespace vipro {

/// Shapes of two operands do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A token id outside the vocabulary.
class VocabularyError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Invalid or contradictory configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system or parse failure (CLI exit code 3).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The attack cannot proceed on this input.
class AttackError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vipro
