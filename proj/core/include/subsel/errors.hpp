#ifndef SUBSEL_ERRORS_HPP
#define SUBSEL_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace subsel {

// Precondition / dimension-contract violations.
class ContractError : public std::invalid_argument {
public:
    explicit ContractError(const std::string& what) : std::invalid_argument(what) {}
};

// Bad user-facing configuration (splits, CLI options, unknown kinds).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// SPD factorization hit a non-positive pivot.
class DecompositionError : public std::runtime_error {
public:
    DecompositionError(const std::string& what, std::size_t pivot)
        : std::runtime_error(what), pivot_index(pivot) {}
    std::size_t pivot_index;
};

// NaN/Inf appeared where finite arithmetic was required.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Iterative solver failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double grad_norm)
        : std::runtime_error(what), final_grad_norm(grad_norm) {}
    double final_grad_norm;
};

// Combinatorial search exceeded its configured refit budget.
class BudgetError : public std::runtime_error {
public:
    explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

// Problem dimension too large for the requested dense path.
class SizeError : public std::runtime_error {
public:
    explicit SizeError(const std::string& what) : std::runtime_error(what) {}
};

// Cell-level CSV failure with coordinates (0-based data row, 0-based column).
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t row_, std::size_t col_)
        : std::runtime_error(what), row(row_), col(col_) {}
    std::size_t row;
    std::size_t col;
};

} // namespace subsel

#endif
