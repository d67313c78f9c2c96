// Copyright 2026 The roieval Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace roieval {

/// Base class for all library errors.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data: bad annotation grammar, schema violations,
/// out-of-range parameters. The CLI maps these to exit code 4.
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// Annotation-grammar failure, carrying the zero-based field index and byte
/// offset where parsing stopped.
class ParseError : public ValidationError {
  public:
    ParseError(const std::string& what, std::size_t field_index, std::size_t byte_offset)
        : ValidationError(what + " (field " + std::to_string(field_index) + ", byte offset " +
                          std::to_string(byte_offset) + ")"),
          field_index_(field_index),
          byte_offset_(byte_offset) {}

    std::size_t field_index() const { return field_index_; }
    std::size_t byte_offset() const { return byte_offset_; }

  private:
    std::size_t field_index_;
    std::size_t byte_offset_;
};

/// Remote service failure (extraction or embedding endpoint). The CLI maps
/// these to exit code 3.
class TransportError : public Error {
  public:
    using Error::Error;
};

/// File-system failure: missing, unreadable or unwritable paths. The CLI
/// maps these to exit code 2.
class IoError : public Error {
  public:
    using Error::Error;
};

}  // namespace roieval
