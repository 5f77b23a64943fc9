#pragma once

#include <stdexcept>
#include <string>

namespace omegalab {

// Base of every error raised by the library. `code()` is the stable
// machine-readable tag used in the CLI's structured error output.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message, std::string context = {})
        : std::runtime_error(message), code_(std::move(code)), context_(std::move(context)) {}

    const std::string& code() const noexcept { return code_; }
    const std::string& context() const noexcept { return context_; }

private:
    std::string code_;
    std::string context_;
};

/// Argument outside the mathematical domain of an operation (n = 0 for
/// factorize, a non-prime modulus, an inadmissible system, ...).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& message, std::string context = {})
        : Error("domain_error", message, std::move(context)) {}
};

/// A documented precondition does not hold (truncation too small, k^2 not
/// dividing Q, ...). The message names what was required.
class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& message, std::string context = {})
        : Error("precondition_error", message, std::move(context)) {}
};

/// Arithmetic would leave the supported machine-word range.
class RangeError : public Error {
public:
    explicit RangeError(const std::string& message, std::string context = {})
        : Error("range_error", message, std::move(context)) {}
};

/// The configured memory budget is too small for the request.
class ResourceError : public Error {
public:
    explicit ResourceError(const std::string& message, std::string context = {})
        : Error("resource_error", message, std::move(context)) {}
};

/// A numerical routine could not reach its requested accuracy.
class PrecisionError : public Error {
public:
    explicit PrecisionError(const std::string& message, std::string context = {})
        : Error("precision_error", message, std::move(context)) {}
};

} // namespace omegalab
