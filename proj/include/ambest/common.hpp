#pragma once

#include <Eigen/Dense>

#include <complex>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ambest {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// Base class of everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad input data or configuration. Maps to CLI exit code 1.
struct ConfigError : Error {
    using Error::Error;
};

/// Numerical failure (divergence, singularity, instability). CLI exit code 2.
struct NumericalError : Error {
    using Error::Error;
};

} // namespace ambest
