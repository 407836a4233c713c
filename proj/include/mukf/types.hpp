// Dense types and error hierarchy shared by every module.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mukf {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Sigma points stored column-wise, l_x rows by 2*l_x+1 columns.
template <typename Scalar>
using Ensemble = Matrix<Scalar>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

/// A covariance failed to factor. `pivot()` is the zero-based diagonal index
/// at which the Cholesky recursion broke down.
class CovarianceDegenerate : public Error {
public:
    CovarianceDegenerate(const std::string& what, Eigen::Index pivot)
        : Error(what + " (failing pivot " + std::to_string(pivot) + ")"), pivot_(pivot) {}

    Eigen::Index pivot() const noexcept { return pivot_; }

private:
    Eigen::Index pivot_;
};

class GainSingular : public Error {
public:
    using Error::Error;
};

/// Wraps a filter failure with the step at which it happened.
class StepFailure : public Error {
public:
    StepFailure(long step, const std::string& what)
        : Error("step " + std::to_string(step) + ": " + what), step_(step) {}

    long step() const noexcept { return step_; }

private:
    long step_;
};

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
    return m.allFinite();
}

/// (M + M^T) / 2
template <typename Derived>
Matrix<typename Derived::Scalar> symmetrize(const Eigen::MatrixBase<Derived>& m) {
    return (m + m.transpose()) / typename Derived::Scalar(2);
}

}  // namespace mukf
