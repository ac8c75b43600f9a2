#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace softcue {

// Root of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class InsufficientDataError : public Error { using Error::Error; };
class ArgumentError : public Error { using Error::Error; };
class NoRampError : public Error { using Error::Error; };
// Division by zero or a value outside the domain of a physical formula.
class DomainError : public Error { using Error::Error; };
class SingularFitError : public Error { using Error::Error; };
class NumericError : public Error { using Error::Error; };
class FitError : public Error { using Error::Error; };
// Hit or false-alarm rate of exactly 0 or 1; apply a correction first.
class MustCorrectError : public Error { using Error::Error; };

}  // namespace softcue
