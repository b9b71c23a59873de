#pragma once

#include <stdexcept>
#include <string>

namespace bergspec {

/// Argument outside the mathematical domain of an operation (gamma <= 0, x <= 0, ...).
class domain_error : public std::domain_error {
public:
    explicit domain_error(const std::string& what) : std::domain_error(what) {}
};

/// Structurally invalid input (non-finite entries, non-Hermitian matrix, overlapping arcs).
class input_error : public std::invalid_argument {
public:
    explicit input_error(const std::string& what) : std::invalid_argument(what) {}
};

/// A requested size exceeds the configured compute or memory budget.
class capacity_error : public std::runtime_error {
public:
    explicit capacity_error(const std::string& what) : std::runtime_error(what) {}
};

class quadrature_error : public std::runtime_error {
public:
    quadrature_error(const std::string& what, double achieved)
        : std::runtime_error(what + " (achieved error estimate " + std::to_string(achieved) + ")"),
          achieved_(achieved) {}

    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

/// A spectral solver failed to converge or returned an error code.
class solver_error : public std::runtime_error {
public:
    explicit solver_error(const std::string& what) : std::runtime_error(what) {}
};

/// An experiment could not be carried out at the requested scale.
class experiment_error : public std::runtime_error {
public:
    explicit experiment_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bergspec
