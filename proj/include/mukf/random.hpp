// Seeded standard-normal streams.
//
// Each stream is a std::mt19937_64 seeded through std::seed_seq with
// {seed_lo, seed_hi, stream_lo, stream_hi}, so one experiment seed gives
// independent, reproducible streams for e.g. process and measurement noise.
// Uniforms take the top 53 bits of a draw mapped onto (0, 1]; normals come
// from the Box-Muller transform, both outputs of a pair used in order.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "mukf/types.hpp"

namespace mukf {

class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed, std::uint64_t stream = 0) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream),
                          static_cast<std::uint32_t>(stream >> 32)};
        engine_.seed(seq);
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on (0, 1].
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double radius = std::sqrt(-2.0 * std::log(uniform()));
        const double angle = 2.0 * std::numbers::pi * uniform();
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    template <typename Scalar = double>
    Vector<Scalar> normal_vector(Eigen::Index n) {
        Vector<Scalar> z(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            z(i) = Scalar(normal());
        }
        return z;
    }

    template <typename Scalar = double>
    Matrix<Scalar> normal_matrix(Eigen::Index rows, Eigen::Index cols) {
        Matrix<Scalar> m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j) {
            for (Eigen::Index i = 0; i < rows; ++i) {
                m(i, j) = Scalar(normal());
            }
        }
        return m;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace mukf
