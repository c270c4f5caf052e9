#pragma once

#include <stdexcept>
#include <string>

namespace scatter {

/// Thrown when an operation's preconditions on its arguments are violated.
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// Thrown when a relative error metric has a zero denominator.
class UndefinedMetric : public std::domain_error {
public:
    explicit UndefinedMetric(const std::string& what) : std::domain_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidInput(msg);
}

}  // namespace scatter
