// Sigma-point ensembles, weights and the weighted moments built from them.
//
// The ensemble for a mean x and covariance P with spread alpha is
//
//   [ x,  x + alpha*s_1 .. x + alpha*s_n,  x - alpha*s_1 .. x - alpha*s_n ]
//
// where S = [s_1 .. s_n] is the lower Cholesky factor of n*P. With the
// weights W = [(alpha^2-1)/alpha^2, 1/(2 alpha^2 n), ...] the weighted mean
// of the ensemble is x and X~ diag(W) X~^T is P, for every alpha > 0.
#pragma once

#include <cmath>
#include <string>

#include "mukf/types.hpp"

namespace mukf {

/// Relative Frobenius asymmetry accepted before a matrix is symmetrized and
/// factored.
inline constexpr double kSymmetryTolerance = 1e-10;

template <typename Scalar>
struct WeightSet {
    Scalar alpha{};
    Eigen::Index state_dim{};
    Vector<Scalar> W;

    Eigen::Index size() const { return W.size(); }
    auto Wd() const { return W.asDiagonal(); }
};

template <typename Scalar>
WeightSet<Scalar> make_weights(Scalar alpha, Eigen::Index state_dim) {
    using std::isfinite;
    if (!(alpha > Scalar(0)) || !isfinite(alpha)) {
        throw InvalidParameter("make_weights: alpha must be positive and finite");
    }
    if (state_dim < 1) {
        throw InvalidParameter("make_weights: state dimension must be at least 1");
    }
    const Scalar a2 = alpha * alpha;
    const Scalar n = Scalar(state_dim);
    WeightSet<Scalar> ws;
    ws.alpha = alpha;
    ws.state_dim = state_dim;
    ws.W = Vector<Scalar>::Constant(2 * state_dim + 1, Scalar(1) / (Scalar(2) * a2 * n));
    ws.W(0) = (a2 - Scalar(1)) / a2;
    return ws;
}

/// Lower-triangular S with S S^T equal to the factored matrix. `jittered`
/// records that eps*I had to be added before the factorization succeeded.
template <typename Scalar>
struct SPDFactor {
    Matrix<Scalar> L;
    bool jittered = false;
};

struct FactorOptions {
    /// When positive, a failed factorization is retried once on M + jitter*I.
    double jitter = 0.0;
};

namespace detail {

// Plain Cholesky-Banachiewicz; returns the failing pivot or -1.
template <typename Scalar>
Eigen::Index cholesky_lower(const Matrix<Scalar>& M, Matrix<Scalar>& L) {
    using std::sqrt;
    const Eigen::Index n = M.rows();
    L.setZero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        Scalar d = M(j, j) - L.row(j).head(j).squaredNorm();
        if (!(d > Scalar(0))) {
            return j;
        }
        L(j, j) = sqrt(d);
        for (Eigen::Index i = j + 1; i < n; ++i) {
            L(i, j) = (M(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / L(j, j);
        }
    }
    return -1;
}

}  // namespace detail

template <typename Derived>
SPDFactor<typename Derived::Scalar> spd_factor(const Eigen::MatrixBase<Derived>& M,
                                               const FactorOptions& opts = {}) {
    using Scalar = typename Derived::Scalar;
    if (M.rows() != M.cols()) {
        throw ShapeError("spd_factor: matrix is not square");
    }
    if (!all_finite(M)) {
        throw InvalidParameter("spd_factor: non-finite entries");
    }
    const Scalar scale = M.norm();
    if ((M - M.transpose()).norm() > Scalar(kSymmetryTolerance) * scale) {
        throw InvalidParameter("spd_factor: matrix is not symmetric");
    }
    Matrix<Scalar> sym = symmetrize(M);
    SPDFactor<Scalar> out;
    Eigen::Index pivot = detail::cholesky_lower(sym, out.L);
    if (pivot >= 0 && opts.jitter > 0.0) {
        sym.diagonal().array() += Scalar(opts.jitter);
        pivot = detail::cholesky_lower(sym, out.L);
        out.jittered = true;
    }
    if (pivot >= 0) {
        throw CovarianceDegenerate("spd_factor: matrix is not positive definite", pivot);
    }
    return out;
}

/// Ensemble around `x` from an existing factor S of l_x*P.
template <typename DerivedX, typename DerivedS>
Ensemble<typename DerivedX::Scalar> ensemble_from_factor(const Eigen::MatrixBase<DerivedX>& x,
                                                         const Eigen::MatrixBase<DerivedS>& S,
                                                         typename DerivedX::Scalar alpha) {
    const Eigen::Index n = x.size();
    if (S.rows() != n || S.cols() != n) {
        throw ShapeError("ensemble_from_factor: factor does not match state dimension");
    }
    Ensemble<typename DerivedX::Scalar> X(n, 2 * n + 1);
    X.col(0) = x;
    for (Eigen::Index i = 0; i < n; ++i) {
        X.col(1 + i) = x + alpha * S.col(i);
        X.col(1 + n + i) = x - alpha * S.col(i);
    }
    return X;
}

template <typename DerivedX, typename DerivedP>
Ensemble<typename DerivedX::Scalar> build_ensemble(const Eigen::MatrixBase<DerivedX>& x,
                                                   const Eigen::MatrixBase<DerivedP>& P,
                                                   typename DerivedX::Scalar alpha,
                                                   const FactorOptions& opts = {}) {
    using Scalar = typename DerivedX::Scalar;
    if (!(alpha > Scalar(0))) {
        throw InvalidParameter("build_ensemble: alpha must be positive");
    }
    if (P.rows() != x.size() || P.cols() != x.size()) {
        throw ShapeError("build_ensemble: covariance does not match state dimension");
    }
    const auto S = spd_factor(Scalar(x.size()) * P, opts);
    return ensemble_from_factor(x, S.L, alpha);
}

/// H(v): `cols` copies of v side by side.
template <typename Derived>
Matrix<typename Derived::Scalar> replicate(const Eigen::MatrixBase<Derived>& v, Eigen::Index cols) {
    if (cols < 1) {
        throw InvalidParameter("replicate: column count must be at least 1");
    }
    return v.rowwise().replicate(cols);
}

template <typename Derived, typename Scalar>
Vector<Scalar> weighted_mean(const Eigen::MatrixBase<Derived>& X, const WeightSet<Scalar>& ws) {
    if (X.cols() != ws.size()) {
        throw ShapeError("weighted_mean: ensemble has " + std::to_string(X.cols()) +
                         " columns, weights have " + std::to_string(ws.size()));
    }
    return X * ws.W;
}

/// X - H(X W)
template <typename Derived, typename Scalar>
Matrix<Scalar> deviations(const Eigen::MatrixBase<Derived>& X, const WeightSet<Scalar>& ws) {
    const Vector<Scalar> mean = weighted_mean(X, ws);
    return X.colwise() - mean;
}

/// A~ W_d B~^T, i.e. sum_i W_i a_i b_i^T.
template <typename DerivedA, typename DerivedB, typename Scalar>
Matrix<Scalar> weighted_cross(const Eigen::MatrixBase<DerivedA>& A,
                              const Eigen::MatrixBase<DerivedB>& B,
                              const WeightSet<Scalar>& ws) {
    if (A.cols() != ws.size() || B.cols() != ws.size()) {
        throw ShapeError("weighted_cross: column counts do not match the weights");
    }
    return A * ws.Wd() * B.transpose();
}

}  // namespace mukf
