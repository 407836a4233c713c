// Randomized sigma-point invariants shared by the unit and acceptance suites.
#pragma once

#include <algorithm>
#include <cmath>

#include "mukf/sigma.hpp"
#include "test_util.hpp"

namespace mukf::test {

struct SigmaPropertyReport {
    int instances = 0;
    double max_weight_sum_err = 0;    // |sum W - 1| / max(1, max_i |W_i|)
    double max_mean_err = 0;          // relative to (|x| + alpha |S|)(1 + |W_1|)
    double max_cov_err = 0;           // relative Frobenius
    double max_factor_err = 0;        // relative Frobenius
    double max_deviation_mean = 0;    // |X~ W|, same scale as max_mean_err

    bool ok() const {
        return max_weight_sum_err <= 1e-14 && max_mean_err <= 1e-12 &&
               max_cov_err <= 1e-10 && max_factor_err <= 1e-12 && max_deviation_mean <= 1e-13;
    }
};

/// alpha uniform on (0, 3], l_x uniform on 1..6, P with condition number up to 1e6.
inline SigmaPropertyReport check_sigma_properties(int instances, std::uint64_t seed) {
    SigmaPropertyReport rep;
    rep.instances = instances;
    NormalStream rng(seed, 0x51);
    for (int i = 0; i < instances; ++i) {
        const double alpha = 3.0 * rng.uniform();
        const auto n = static_cast<Eigen::Index>(1 + rng.next_u64() % 6);
        const auto ws = make_weights(alpha, n);
        // For alpha < 1/sqrt(2) the centre weight exceeds 1 in magnitude and its
        // spacing in double sets the floor on the sum.
        rep.max_weight_sum_err =
            std::max(rep.max_weight_sum_err,
                     std::abs(ws.W.sum() - 1.0) / std::max(1.0, ws.W.cwiseAbs().maxCoeff()));

        const double scale = std::pow(10.0, -3.0 + 6.0 * rng.uniform());
        const double cond = std::pow(10.0, 6.0 * rng.uniform());
        const Matrix<double> P = random_spd_cond(rng, n, cond, scale);
        const Vector<double> x = 10.0 * rng.normal_vector(n);

        const auto S = spd_factor(P);
        rep.max_factor_err = std::max(rep.max_factor_err, (S.L * S.L.transpose() - P).norm() / P.norm());

        const auto X = build_ensemble(x, P, alpha);
        const double spread = alpha * std::sqrt(double(n) * P.trace());
        rep.max_mean_err =
            std::max(rep.max_mean_err, (weighted_mean(X, ws) - x).norm() / (x.norm() + spread) /
                                           (1.0 + std::abs(ws.W(0))));
        const auto Xt = deviations(X, ws);
        rep.max_deviation_mean =
            std::max(rep.max_deviation_mean,
                     (Xt * ws.W).norm() / (x.norm() + spread) / (1.0 + std::abs(ws.W(0))));
        rep.max_cov_err = std::max(rep.max_cov_err, (weighted_cross(Xt, Xt, ws) - P).norm() / P.norm());
    }
    return rep;
}

}  // namespace mukf::test
