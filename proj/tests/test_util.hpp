#pragma once

#include <Eigen/QR>

#include "mukf/models.hpp"
#include "mukf/random.hpp"

namespace mukf::test {

inline Matrix<double> mat(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix<double> m(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

inline Vector<double> vec(std::initializer_list<double> xs) {
    Vector<double> v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

/// SPD matrix with eigenvalues log-uniform in [scale, scale * cond].
inline Matrix<double> random_spd_cond(NormalStream& rng, Eigen::Index n, double cond, double scale = 1.0) {
    const Eigen::HouseholderQR<Matrix<double>> qr(rng.normal_matrix(n, n));
    const Matrix<double> V = qr.householderQ();
    Vector<double> lambda(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        lambda(i) = scale * std::pow(cond, rng.uniform());
    }
    return symmetrize(Matrix<double>(V * lambda.asDiagonal() * V.transpose()));
}

/// sum_i w_i a_i b_i^T accumulated column by column.
inline Matrix<double> cross_by_columns(const Matrix<double>& A, const Matrix<double>& B,
                                       const Vector<double>& w) {
    Matrix<double> out = Matrix<double>::Zero(A.rows(), B.rows());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        for (Eigen::Index r = 0; r < A.rows(); ++r) {
            for (Eigen::Index c = 0; c < B.rows(); ++c) {
                out(r, c) += w(i) * A(r, i) * B(c, i);
            }
        }
    }
    return out;
}

}  // namespace mukf::test
