// System models, the Van der Pol and Lorenz benchmarks, and truth simulation.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <type_traits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "mukf/random.hpp"
#include "mukf/types.hpp"

namespace mukf {

/// x_{k+1} = A_k x_k + B_k u_k + w_k,  y_k = C_k x_k + v_k.
/// Every matrix is looked up by step so time-varying systems fit the same type.
template <typename Scalar>
struct LinearModel {
    using MatrixAt = std::function<Matrix<Scalar>(long)>;

    Eigen::Index state_dim = 0;
    Eigen::Index input_dim = 0;
    Eigen::Index output_dim = 0;
    MatrixAt A, B, C, Q, R;

    static LinearModel constant(Matrix<Scalar> A, Matrix<Scalar> B, Matrix<Scalar> C,
                                Matrix<Scalar> Q, Matrix<Scalar> R) {
        LinearModel m;
        m.state_dim = A.rows();
        m.input_dim = B.cols();
        m.output_dim = C.rows();
        m.A = [A = std::move(A)](long) { return A; };
        m.B = [B = std::move(B)](long) { return B; };
        m.C = [C = std::move(C)](long) { return C; };
        m.Q = [Q = std::move(Q)](long) { return Q; };
        m.R = [R = std::move(R)](long) { return R; };
        m.check(0);
        return m;
    }

    /// Throws ShapeError if the matrices at step k are inconsistent.
    void check(long k) const {
        const auto a = A(k), b = B(k), c = C(k), q = Q(k), r = R(k);
        const auto n = state_dim, m = input_dim, p = output_dim;
        if (a.rows() != n || a.cols() != n || b.rows() != n || b.cols() != m || c.rows() != p ||
            c.cols() != n || q.rows() != n || q.cols() != n || r.rows() != p || r.cols() != p) {
            throw ShapeError("LinearModel: inconsistent matrix dimensions at step " +
                             std::to_string(k));
        }
    }
};

/// x_{k+1} = f_k(x_k, u_k) + w_k,  y_k = g_k(x_k) + v_k.
/// `output_jacobian` may be left empty; the modified one-step filter needs it.
template <typename Scalar>
struct NonlinearModel {
    using Dynamics = std::function<Vector<Scalar>(const Vector<Scalar>&, const Vector<Scalar>&, long)>;
    using Output = std::function<Vector<Scalar>(const Vector<Scalar>&, long)>;
    using Jacobian = std::function<Matrix<Scalar>(const Vector<Scalar>&, long)>;
    using MatrixAt = std::function<Matrix<Scalar>(long)>;

    Eigen::Index state_dim = 0;
    Eigen::Index input_dim = 0;
    Eigen::Index output_dim = 0;
    Dynamics f;
    Output g;
    Jacobian output_jacobian;
    MatrixAt Q, R;
};

template <typename Scalar>
NonlinearModel<Scalar> as_nonlinear(const LinearModel<Scalar>& lin) {
    NonlinearModel<Scalar> m;
    m.state_dim = lin.state_dim;
    m.input_dim = lin.input_dim;
    m.output_dim = lin.output_dim;
    m.f = [A = lin.A, B = lin.B](const Vector<Scalar>& x, const Vector<Scalar>& u, long k) {
        Vector<Scalar> next = A(k) * x;
        if (u.size() > 0) {
            next += B(k) * u;
        }
        return next;
    };
    m.g = [C = lin.C](const Vector<Scalar>& x, long k) -> Vector<Scalar> { return C(k) * x; };
    m.output_jacobian = [C = lin.C](const Vector<Scalar>&, long k) { return C(k); };
    m.Q = lin.Q;
    m.R = lin.R;
    return m;
}

template <typename Scalar>
Vector<Scalar> linear_predict(const LinearModel<Scalar>& model, const Vector<Scalar>& x,
                              const Vector<Scalar>& u, long k) {
    const auto A = model.A(k);
    const auto B = model.B(k);
    if (x.size() != A.cols() || (u.size() != 0 && u.size() != B.cols())) {
        throw ShapeError("linear_predict: state or input has the wrong length");
    }
    Vector<Scalar> next = A * x;
    if (u.size() > 0) {
        next += B * u;
    }
    return next;
}

// Forward-Euler Van der Pol map.
template <typename Scalar>
Vector<Scalar> vdp_step(const Vector<Scalar>& x, Scalar Ts, Scalar mu) {
    Vector<Scalar> next(2);
    next(0) = x(0) + Ts * x(1);
    next(1) = x(1) + Ts * (mu * (Scalar(1) - x(0) * x(0)) * x(1) - x(0));
    return next;
}

// Forward-Euler Lorenz map.
template <typename Scalar>
Vector<Scalar> lorenz_step(const Vector<Scalar>& x, Scalar Ts, Scalar sigma, Scalar rho,
                           Scalar beta) {
    Vector<Scalar> rate(3);
    rate(0) = sigma * (x(1) - x(0));
    rate(1) = x(0) * (rho - x(2)) - x(1);
    rate(2) = x(0) * x(1) - beta * x(2);
    return x + Ts * rate;
}

namespace detail {

template <typename Scalar>
NonlinearModel<Scalar> with_linear_output(NonlinearModel<Scalar> m, Matrix<Scalar> C,
                                          Matrix<Scalar> Q, Matrix<Scalar> R) {
    m.output_dim = C.rows();
    m.g = [C](const Vector<Scalar>& x, long) -> Vector<Scalar> { return C * x; };
    m.output_jacobian = [C](const Vector<Scalar>&, long) { return C; };
    m.Q = [Q = std::move(Q)](long) { return Q; };
    m.R = [R = std::move(R)](long) { return R; };
    return m;
}

}  // namespace detail

/// Van der Pol oscillator measured through y = x_1, Q = q*I_2, R = r.
template <typename Scalar>
NonlinearModel<Scalar> vdp_model(Scalar Ts, Scalar mu, Scalar q, Scalar r) {
    NonlinearModel<Scalar> m;
    m.state_dim = 2;
    m.input_dim = 0;
    m.f = [Ts, mu](const Vector<Scalar>& x, const Vector<Scalar>&, long) {
        return vdp_step<Scalar>(x, Ts, mu);
    };
    Matrix<Scalar> C(1, 2);
    C << 1, 0;
    return detail::with_linear_output<Scalar>(std::move(m), C, q * Matrix<Scalar>::Identity(2, 2),
                                              r * Matrix<Scalar>::Identity(1, 1));
}

/// Lorenz system measured through y = x_2, Q = q*I_3, R = r.
template <typename Scalar>
NonlinearModel<Scalar> lorenz_model(Scalar Ts, Scalar sigma, Scalar rho, Scalar beta, Scalar q,
                                    Scalar r) {
    NonlinearModel<Scalar> m;
    m.state_dim = 3;
    m.input_dim = 0;
    m.f = [=](const Vector<Scalar>& x, const Vector<Scalar>&, long) {
        return lorenz_step<Scalar>(x, Ts, sigma, rho, beta);
    };
    Matrix<Scalar> C(1, 3);
    C << 0, 1, 0;
    return detail::with_linear_output<Scalar>(std::move(m), C, q * Matrix<Scalar>::Identity(3, 3),
                                              r * Matrix<Scalar>::Identity(1, 1));
}

/// Random SPD matrix G G^T / n + floor*I with G standard normal.
template <typename Scalar>
Matrix<Scalar> random_spd(NormalStream& rng, Eigen::Index n, Scalar floor = Scalar(0.1)) {
    const Matrix<Scalar> G = rng.normal_matrix<Scalar>(n, n);
    return symmetrize(Matrix<Scalar>(G * G.transpose() / Scalar(n))) +
           floor * Matrix<Scalar>::Identity(n, n);
}

/// Random time-invariant linear system with n states, p outputs and one input.
/// A is rescaled to a spectral radius drawn from [0.5, 0.98].
template <typename Scalar>
LinearModel<Scalar> random_linear_model(std::uint64_t seed, Eigen::Index n, Eigen::Index p) {
    if (n < 1 || p < 0 || p > n) {
        throw InvalidParameter("random_linear_model: need n >= 1 and 0 <= p <= n");
    }
    NormalStream rng(seed, 0x11);
    Matrix<Scalar> A = rng.normal_matrix<Scalar>(n, n);
    const double radius = Eigen::EigenSolver<Eigen::MatrixXd>(A.template cast<double>(), false)
                              .eigenvalues()
                              .cwiseAbs()
                              .maxCoeff();
    const double target = 0.5 + 0.48 * rng.uniform();
    if (radius > 1e-12) {
        A *= Scalar(target / radius);
    }
    Matrix<Scalar> B = rng.normal_matrix<Scalar>(n, 1);
    Matrix<Scalar> C = rng.normal_matrix<Scalar>(p, n);
    Matrix<Scalar> Q = random_spd<Scalar>(rng, n);
    Matrix<Scalar> R = random_spd<Scalar>(rng, p);
    return LinearModel<Scalar>::constant(std::move(A), std::move(B), std::move(C), std::move(Q),
                                         std::move(R));
}

/// mean + S z with S S^T = cov from a symmetric eigendecomposition, so
/// singular (PSD) covariances are accepted.
template <typename DerivedM, typename DerivedC>
Vector<typename DerivedM::Scalar> sample_gaussian(const Eigen::MatrixBase<DerivedM>& mean,
                                                  const Eigen::MatrixBase<DerivedC>& cov,
                                                  NormalStream& rng) {
    using Scalar = typename DerivedM::Scalar;
    const Eigen::Index n = mean.size();
    if (cov.rows() != n || cov.cols() != n) {
        throw ShapeError("sample_gaussian: covariance does not match the mean");
    }
    const Vector<Scalar> z = rng.normal_vector<Scalar>(n);
    if (n == 0) {
        return mean;
    }
    const Scalar scale = cov.cwiseAbs().maxCoeff();
    if ((cov - cov.transpose()).norm() > Scalar(1e-10) * scale) {
        throw InvalidParameter("sample_gaussian: covariance is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(symmetrize(cov));
    const Vector<Scalar> lambda = eig.eigenvalues();
    if (lambda.minCoeff() < -Scalar(1e-12) * (Scalar(1) + scale)) {
        throw InvalidParameter("sample_gaussian: covariance is not positive semidefinite");
    }
    const Vector<Scalar> root = lambda.cwiseMax(Scalar(0)).cwiseSqrt();
    return mean + eig.eigenvectors() * root.asDiagonal() * z;
}

template <typename Scalar>
struct Trajectory {
    std::vector<Vector<Scalar>> states;   // x_0 .. x_N
    std::vector<Vector<Scalar>> outputs;  // y_1 .. y_N
    std::vector<Vector<Scalar>> inputs;   // u_0 .. u_{N-1}

    std::size_t steps() const { return outputs.size(); }
};

inline constexpr std::uint64_t kProcessNoiseStream = 1;
inline constexpr std::uint64_t kMeasurementNoiseStream = 2;

/// Propagates x0 through the model for `steps` steps with sampled noise.
/// Process and measurement noise draw from separate streams of `seed`.
template <typename Scalar>
Trajectory<Scalar> simulate_truth(const NonlinearModel<Scalar>& model,
                                  const std::type_identity_t<Vector<Scalar>>& x0,
                                  long steps, std::uint64_t seed,
                                  std::optional<std::vector<Vector<Scalar>>> inputs = std::nullopt) {
    if (steps < 1) {
        throw InvalidParameter("simulate_truth: need at least one step");
    }
    if (x0.size() != model.state_dim) {
        throw ShapeError("simulate_truth: initial state has the wrong length");
    }
    if (inputs && static_cast<long>(inputs->size()) != steps) {
        throw ShapeError("simulate_truth: input sequence length differs from step count");
    }
    NormalStream process(seed, kProcessNoiseStream);
    NormalStream measurement(seed, kMeasurementNoiseStream);
    const Vector<Scalar> zero_state = Vector<Scalar>::Zero(model.state_dim);
    const Vector<Scalar> zero_output = Vector<Scalar>::Zero(model.output_dim);

    Trajectory<Scalar> traj;
    traj.states.reserve(steps + 1);
    traj.outputs.reserve(steps);
    traj.inputs = inputs ? std::move(*inputs)
                         : std::vector<Vector<Scalar>>(steps, Vector<Scalar>::Zero(model.input_dim));
    traj.states.push_back(x0);
    for (long k = 0; k < steps; ++k) {
        const Vector<Scalar> w = sample_gaussian(zero_state, model.Q(k), process);
        Vector<Scalar> next = model.f(traj.states.back(), traj.inputs[k], k) + w;
        const Vector<Scalar> v = sample_gaussian(zero_output, model.R(k + 1), measurement);
        traj.outputs.push_back(model.g(next, k + 1) + v);
        traj.states.push_back(std::move(next));
    }
    return traj;
}

template <typename Scalar>
Trajectory<Scalar> simulate_truth(const LinearModel<Scalar>& model,
                                  const std::type_identity_t<Vector<Scalar>>& x0,
                                  long steps, std::uint64_t seed,
                                  std::optional<std::vector<Vector<Scalar>>> inputs = std::nullopt) {
    return simulate_truth(as_nonlinear(model), x0, steps, seed, std::move(inputs));
}

}  // namespace mukf
