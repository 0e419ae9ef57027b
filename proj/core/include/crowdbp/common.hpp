#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace crowdbp {

using Index = std::size_t;
using Label = std::uint32_t;

// Row-major so that a row is a contiguous per-task (or per-edge) distribution.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Invalid arguments or configuration supplied by the caller.
class UsageError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent input data (files, datasets).
class DataError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// A numerical procedure produced something it cannot recover from (NaN loss, ...).
class NumericalError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace crowdbp
