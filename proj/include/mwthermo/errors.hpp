#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mwthermo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// A parameter violates its documented domain (e.g. Gamma <= 0, alpha >= 0).
class InvalidArgument : public Error
{
public:
    using Error::Error;
};

/// An iterative or linear solver failed to produce an acceptable answer.
class ConvergenceError : public Error
{
public:
    using Error::Error;
};

/// The Liouvillian has more than one stationary state.
class DegenerateSteadyState : public ConvergenceError
{
public:
    using ConvergenceError::ConvergenceError;
};

/// A measured quantity lies outside what the forward model can produce.
class RangeError : public Error
{
public:
    using Error::Error;
};

/// A file could not be opened, read or written.
class IoError : public Error
{
public:
    using Error::Error;
};

/// Malformed input text; carries the offending line number (1-based, 0 if unknown).
class ParseError : public Error
{
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line)
    {
    }

    /// Same error attributed to a named source, e.g. a file path.
    ParseError(const std::string& source, const ParseError& inner)
        : Error(source + ": " + inner.what()), line_(inner.line_)
    {
    }

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace mwthermo
