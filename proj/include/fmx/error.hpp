#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fmx {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text; carries a 1-based line number when one is known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A value or argument outside the operation's domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// An operation was requested in a state that cannot serve it.
class StateError : public Error {
public:
    using Error::Error;
};

}  // namespace fmx
