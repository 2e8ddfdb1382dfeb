#pragma once

#include <stdexcept>
#include <string>

namespace tmml {

/// Input or argument failed validation. The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// q vanishes somewhere p has mass.
class SupportMismatchError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// A numeric operation hit an undefined case at runtime (singular
/// innovation, zero total variance, ...). The CLI maps this to exit code 2.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message)
{
    if (!condition) {
        throw ValidationError(message);
    }
}

} // namespace detail
} // namespace tmml
