/// @file errors.hpp
/// @brief Error types shared across the library.

#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace hsns {

/// Raised when a configuration file or CLI input fails validation.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when a computation produces a non-finite value or fails to
/// converge. Carries the cell index and a tag naming the offending term
/// when the failure happened inside the time stepper.
struct NumericError : std::runtime_error {
    int cell = -1;
    std::string term;

    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}

    NumericError(const std::string& term_tag, int cell_index, const std::string& msg)
        : std::runtime_error(msg), cell(cell_index), term(term_tag) {}
};

namespace detail {

template <class... Args>
std::string msg(Args&&... args) {
    std::ostringstream os;
    os.precision(17);
    (os << ... << args);
    return os.str();
}

}  // namespace detail

}  // namespace hsns
