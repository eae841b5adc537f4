#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rooney {

// Base for failures of numerical procedures (series, root finding, quadrature),
// as opposed to invalid inputs which raise std::domain_error / std::invalid_argument.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Quadrature did not reach the requested tolerance within its panel budget.
// Carries the partial estimate so callers can still inspect it.
class QuadratureError : public NumericError {
public:
    QuadratureError(const std::string& what, double partial, double error_estimate)
        : NumericError(what), partial_estimate(partial), error_estimate(error_estimate) {}
    double partial_estimate;
    double error_estimate;
};

// A Monte Carlo estimator conditioned on an event that never occurred.
class InsufficientConditioningEvents : public std::runtime_error {
public:
    explicit InsufficientConditioningEvents(std::int64_t trials)
        : std::runtime_error("conditioning event occurred in none of " + std::to_string(trials) +
                             " trials; increase trials or change parameters"),
          trials(trials) {}
    std::int64_t trials;
};

// Exact enumeration conditioned on an event of probability zero.
class EmptyConditioningEvent : public std::runtime_error {
public:
    EmptyConditioningEvent() : std::runtime_error("conditioning event has probability zero") {}
};

// Malformed input file; line is 1-based.
class ParseError : public std::runtime_error {
public:
    ParseError(std::int64_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line(line) {}
    std::int64_t line;
};

}  // namespace rooney
