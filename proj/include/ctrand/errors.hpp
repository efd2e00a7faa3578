#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ctrand {

/// A CDF value collided with a dyadic cell endpoint, or the enclosure could
/// not be separated from it at the maximum configured precision.
struct BoundaryAmbiguous : std::runtime_error {
    explicit BoundaryAmbiguous(const std::string& what) : std::runtime_error(what) {}
};

/// Rate/duration pairing violates t < inf <=> rate > 0.
struct RateDurationMismatch : std::runtime_error {
    explicit RateDurationMismatch(const std::string& what) : std::runtime_error(what) {}
};

/// An enumeration exceeded its node budget.
struct BudgetExceeded : std::runtime_error {
    explicit BudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

/// Input text could not be parsed; carries 1-based position.
struct ParseError : std::runtime_error {
    std::size_t line = 0;
    std::size_t column = 0;
    ParseError(const std::string& what, std::size_t line_, std::size_t column_)
        : std::runtime_error(what + " (line " + std::to_string(line_) + ", column " +
                             std::to_string(column_) + ")"),
          line(line_),
          column(column_) {}
};

}  // namespace ctrand
