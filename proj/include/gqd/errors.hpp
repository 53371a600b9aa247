#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gqd {

// A CSV data row that failed to parse; keeps the 1-based row index.
class malformed_row_error : public std::runtime_error {
public:
    malformed_row_error(std::size_t row, const std::string& what)
        : std::runtime_error("malformed row " + std::to_string(row) + ": " + what),
          row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

// Posterior grid too narrow: non-negligible mass sits on the grid boundary.
class grid_coverage_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Monte Carlo resampling rejected more than the allowed fraction of draws.
class rejection_rate_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class singular_jacobian_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class basis_mismatch_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace gqd
