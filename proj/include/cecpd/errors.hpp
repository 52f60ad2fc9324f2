#pragma once

#include <stdexcept>
#include <string>

namespace cecpd {

// Precondition or configuration violation (bad k, min_seg, group sizes...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Unreadable or unwritable file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input document: non-numeric CSV cell, ragged rows, bad JSON.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cecpd
