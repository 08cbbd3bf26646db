#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fitngp {

/// Bad argument or violated precondition. Maps to CLI exit code 2.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed configuration (missing keys, wrong types, unknown labels). Exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written. Exit code 3.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed file contents. Carries a byte offset (binary formats) or a
/// line number (text formats); the unused one is -1. Exit code 3.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::int64_t byte_offset, std::int64_t line = -1);

    std::int64_t byte_offset() const noexcept { return byte_offset_; }
    std::int64_t line() const noexcept { return line_; }

private:
    std::int64_t byte_offset_;
    std::int64_t line_;
};

/// Raised when a mask yields no back-projected point.
class EmptyMaskError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fitngp
