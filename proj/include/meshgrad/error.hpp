#pragma once

#include <stdexcept>
#include <string>

namespace meshgrad {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text or binary data.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

// Well-formed input violating a documented invariant or precondition.
class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace meshgrad
