#pragma once

#include <stdexcept>
#include <string>

namespace aniso {

/** @brief Invalid arguments or a spec outside the supported domain. */
class DomainError : public std::invalid_argument {
public:
    DomainError(const std::string& module, const std::string& what)
        : std::invalid_argument(module + ": " + what) {}
};

/** @brief The requested formula does not exist on this exponent branch. */
class BranchError : public DomainError {
public:
    using DomainError::DomainError;
};

/** @brief A coefficient integral diverges at degenerate ellipse parameters. */
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& module, const std::string& what)
        : std::runtime_error(module + ": " + what) {}
};

/** @brief The potential is not in the regime the operation requires. */
class RegimeError : public std::runtime_error {
public:
    RegimeError(const std::string& module, const std::string& what)
        : std::runtime_error(module + ": " + what) {}
};

/** @brief Root bracketing, step control or convergence failed. */
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& module, const std::string& what)
        : std::runtime_error(module + ": " + what) {}
};

} // namespace aniso
