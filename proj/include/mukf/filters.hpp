// Kalman filter, two-step UKF, one-step UKF and the modified one-step UKF.
//
// All four share the covariance-form update
//
//   K = Pez Pz^{-1},   x+ = x- + K (y - yhat),   P+ = P- - K Pez^T
//
// and differ only in how Pz and Pez are obtained:
//
//   KF    Pz = C P- C^T + R            Pez = P- C^T
//   UKF2  Pz = Y~ Wd Y~^T + R          Pez = X~' Wd Y~^T   (X' regenerated from x-, P-)
//   UKF1  Pz = Y~ Wd Y~^T + R          Pez = X~ Wd Y~^T    (X propagated through f)
//   MUKF  Pz = UKF1 + C Q C^T          Pez = UKF1 + Q C^T  (C: output Jacobian at x-)
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mukf/models.hpp"
#include "mukf/sigma.hpp"
#include "mukf/types.hpp"

namespace mukf {

template <typename Scalar>
struct Posterior {
    Vector<Scalar> mean;
    Matrix<Scalar> cov;
    long step = 0;
};

template <typename Scalar>
struct StepDiagnostics {
    Vector<Scalar> prior_mean;
    Matrix<Scalar> prior_cov;
    Matrix<Scalar> Pz;
    Matrix<Scalar> Pez;
    Matrix<Scalar> gain;
    Vector<Scalar> innovation;
    Vector<Scalar> predicted_output;
    int jitter_events = 0;
};

template <typename Scalar>
struct StepResult {
    Posterior<Scalar> posterior;
    StepDiagnostics<Scalar> diagnostics;
};

enum class FilterKind { KF, UKF2, UKF1, MUKF };

inline std::string_view to_string(FilterKind kind) {
    switch (kind) {
        case FilterKind::KF: return "kf";
        case FilterKind::UKF2: return "ukf2";
        case FilterKind::UKF1: return "ukf1";
        case FilterKind::MUKF: return "mukf";
    }
    return "?";
}

inline FilterKind parse_filter_kind(std::string_view name) {
    if (name == "kf") return FilterKind::KF;
    if (name == "ukf2") return FilterKind::UKF2;
    if (name == "ukf1") return FilterKind::UKF1;
    if (name == "mukf") return FilterKind::MUKF;
    throw InvalidParameter("unknown filter '" + std::string(name) + "'");
}

struct FilterOptions {
    double alpha = 1.5;
    /// Added to the diagonal when an ensemble covariance fails to factor.
    /// Zero means a degenerate covariance is reported as an error.
    double jitter = 0.0;
};

template <typename Scalar>
struct GainUpdate {
    Vector<Scalar> mean;
    Matrix<Scalar> cov;
    Matrix<Scalar> gain;
};

template <typename Scalar>
GainUpdate<Scalar> posterior_update(const Vector<Scalar>& prior_mean, const Matrix<Scalar>& prior_cov,
                                    const Matrix<Scalar>& Pz, const Matrix<Scalar>& Pez,
                                    const Vector<Scalar>& y, const Vector<Scalar>& yhat,
                                    const FilterOptions& opts = {}) {
    const Eigen::Index n = prior_mean.size();
    const Eigen::Index p = y.size();
    if (prior_cov.rows() != n || prior_cov.cols() != n || Pz.rows() != p || Pz.cols() != p ||
        Pez.rows() != n || Pez.cols() != p || yhat.size() != p) {
        throw ShapeError("posterior_update: inconsistent dimensions");
    }
    GainUpdate<Scalar> out;
    if (p == 0) {
        out.mean = prior_mean;
        out.cov = prior_cov;
        out.gain = Matrix<Scalar>(n, 0);
        return out;
    }
    // Pz K^T = Pez^T
    Eigen::LLT<Matrix<Scalar>> llt(symmetrize(Pz));
    if (llt.info() != Eigen::Success) {
        throw GainSingular("posterior_update: output-error covariance is not invertible");
    }
    out.gain = llt.solve(Pez.transpose()).transpose();
    out.mean = prior_mean + out.gain * (y - yhat);
    out.cov = symmetrize(Matrix<Scalar>(prior_cov - out.gain * Pez.transpose()));
    if (opts.jitter <= 0.0) {
        Matrix<Scalar> L;
        const Eigen::Index pivot = detail::cholesky_lower(out.cov, L);
        if (pivot >= 0) {
            throw CovarianceDegenerate("posterior_update: posterior covariance lost definiteness",
                                       pivot);
        }
    }
    return out;
}

namespace detail {

template <typename Scalar>
void check_step_inputs(Eigen::Index n, Eigen::Index m, Eigen::Index p, const Posterior<Scalar>& post,
                       const Vector<Scalar>& u, const Vector<Scalar>& y) {
    if (post.mean.size() != n || post.cov.rows() != n || post.cov.cols() != n) {
        throw ShapeError("filter step: posterior does not match the model state dimension");
    }
    if (u.size() != 0 && u.size() != m) {
        throw ShapeError("filter step: input has the wrong length");
    }
    if (y.size() != p) {
        throw ShapeError("filter step: measurement has the wrong length");
    }
}

template <typename Scalar>
StepResult<Scalar> finish(StepDiagnostics<Scalar> d, const Vector<Scalar>& y, long next_step,
                          const FilterOptions& opts) {
    d.innovation = y - d.predicted_output;
    auto upd = posterior_update(d.prior_mean, d.prior_cov, d.Pz, d.Pez, y, d.predicted_output, opts);
    d.gain = std::move(upd.gain);
    return {Posterior<Scalar>{std::move(upd.mean), std::move(upd.cov), next_step}, std::move(d)};
}

template <typename Scalar>
Ensemble<Scalar> make_ensemble(const Vector<Scalar>& x, const Matrix<Scalar>& P,
                               const FilterOptions& opts, int& jitter_events) {
    const auto S = spd_factor(Matrix<Scalar>(Scalar(x.size()) * P), FactorOptions{opts.jitter});
    jitter_events += S.jittered ? 1 : 0;
    return ensemble_from_factor(x, S.L, Scalar(opts.alpha));
}

template <typename Scalar>
Matrix<Scalar> map_outputs(const NonlinearModel<Scalar>& model, const Ensemble<Scalar>& X, long k) {
    Matrix<Scalar> Y(model.output_dim, X.cols());
    for (Eigen::Index i = 0; i < X.cols(); ++i) {
        Y.col(i) = model.g(X.col(i), k);
    }
    return Y;
}

// Shared first half of every UKF variant: sigma points of the posterior pushed
// through f, giving the prior moments.
template <typename Scalar>
struct Propagated {
    Ensemble<Scalar> X;
    Matrix<Scalar> Xtilde;
    WeightSet<Scalar> weights;
    StepDiagnostics<Scalar> diag;
};

template <typename Scalar>
Propagated<Scalar> propagate(const NonlinearModel<Scalar>& model, const Posterior<Scalar>& post,
                             const Vector<Scalar>& u, const Vector<Scalar>& y,
                             const FilterOptions& opts) {
    check_step_inputs(model.state_dim, model.input_dim, model.output_dim, post, u, y);
    const long k = post.step;
    Propagated<Scalar> out;
    out.weights = make_weights(Scalar(opts.alpha), model.state_dim);
    const Ensemble<Scalar> Xk = make_ensemble(post.mean, post.cov, opts, out.diag.jitter_events);
    out.X.resize(Xk.rows(), Xk.cols());
    for (Eigen::Index i = 0; i < Xk.cols(); ++i) {
        out.X.col(i) = model.f(Xk.col(i), u, k);
    }
    out.diag.prior_mean = weighted_mean(out.X, out.weights);
    out.Xtilde = out.X.colwise() - out.diag.prior_mean;
    out.diag.prior_cov =
        symmetrize(Matrix<Scalar>(weighted_cross(out.Xtilde, out.Xtilde, out.weights) + model.Q(k)));
    return out;
}

}  // namespace detail

template <typename Scalar>
StepResult<Scalar> kf_step(const LinearModel<Scalar>& model, const Posterior<Scalar>& post,
                           const Vector<Scalar>& u, const Vector<Scalar>& y,
                           const FilterOptions& opts = {}) {
    detail::check_step_inputs(model.state_dim, model.input_dim, model.output_dim, post, u, y);
    const long k = post.step;
    const Matrix<Scalar> A = model.A(k);
    const Matrix<Scalar> C = model.C(k + 1);
    StepDiagnostics<Scalar> d;
    d.prior_mean = linear_predict(model, post.mean, u, k);
    d.prior_cov = symmetrize(Matrix<Scalar>(A * post.cov * A.transpose() + model.Q(k)));
    d.Pz = symmetrize(Matrix<Scalar>(C * d.prior_cov * C.transpose() + model.R(k + 1)));
    d.Pez = d.prior_cov * C.transpose();
    d.predicted_output = C * d.prior_mean;
    return detail::finish(std::move(d), y, k + 1, opts);
}

template <typename Scalar>
StepResult<Scalar> ukf2_step(const NonlinearModel<Scalar>& model, const Posterior<Scalar>& post,
                             const Vector<Scalar>& u, const Vector<Scalar>& y,
                             const FilterOptions& opts = {}) {
    auto prop = detail::propagate(model, post, u, y, opts);
    auto& d = prop.diag;
    const long k1 = post.step + 1;
    const Ensemble<Scalar> Xr = detail::make_ensemble(d.prior_mean, d.prior_cov, opts, d.jitter_events);
    const Matrix<Scalar> Y = detail::map_outputs(model, Xr, k1);
    d.predicted_output = weighted_mean(Y, prop.weights);
    const Matrix<Scalar> Ytilde = Y.colwise() - d.predicted_output;
    const Matrix<Scalar> Xrtilde = deviations(Xr, prop.weights);
    d.Pz = symmetrize(Matrix<Scalar>(weighted_cross(Ytilde, Ytilde, prop.weights) + model.R(k1)));
    d.Pez = weighted_cross(Xrtilde, Ytilde, prop.weights);
    return detail::finish(std::move(d), y, k1, opts);
}

template <typename Scalar>
StepResult<Scalar> ukf1_step(const NonlinearModel<Scalar>& model, const Posterior<Scalar>& post,
                             const Vector<Scalar>& u, const Vector<Scalar>& y,
                             const FilterOptions& opts = {}) {
    auto prop = detail::propagate(model, post, u, y, opts);
    auto& d = prop.diag;
    const long k1 = post.step + 1;
    const Matrix<Scalar> Y = detail::map_outputs(model, prop.X, k1);
    d.predicted_output = weighted_mean(Y, prop.weights);
    const Matrix<Scalar> Ytilde = Y.colwise() - d.predicted_output;
    d.Pz = symmetrize(Matrix<Scalar>(weighted_cross(Ytilde, Ytilde, prop.weights) + model.R(k1)));
    d.Pez = weighted_cross(prop.Xtilde, Ytilde, prop.weights);
    return detail::finish(std::move(d), y, k1, opts);
}

template <typename Scalar>
StepResult<Scalar> mukf_step(const NonlinearModel<Scalar>& model, const Posterior<Scalar>& post,
                             const Vector<Scalar>& u, const Vector<Scalar>& y,
                             const FilterOptions& opts = {}) {
    if (!model.output_jacobian) {
        throw InvalidParameter("mukf_step: model has no output Jacobian");
    }
    auto prop = detail::propagate(model, post, u, y, opts);
    auto& d = prop.diag;
    const long k = post.step;
    const long k1 = k + 1;
    const Matrix<Scalar> C = model.output_jacobian(d.prior_mean, k1);
    if (C.rows() != model.output_dim || C.cols() != model.state_dim) {
        throw ShapeError("mukf_step: output Jacobian has the wrong shape");
    }
    const Matrix<Scalar> Q = model.Q(k);
    const Matrix<Scalar> QCt = Q * C.transpose();
    const Matrix<Scalar> Y = detail::map_outputs(model, prop.X, k1);
    d.predicted_output = weighted_mean(Y, prop.weights);
    const Matrix<Scalar> Ytilde = Y.colwise() - d.predicted_output;
    d.Pz = symmetrize(
        Matrix<Scalar>(weighted_cross(Ytilde, Ytilde, prop.weights) + C * QCt + model.R(k1)));
    d.Pez = weighted_cross(prop.Xtilde, Ytilde, prop.weights) + QCt;
    return detail::finish(std::move(d), y, k1, opts);
}

struct FilterConfig {
    FilterKind kind = FilterKind::UKF2;
    FilterOptions options;
};

namespace detail {

template <typename Scalar, typename StepFn>
std::vector<StepResult<Scalar>> fold_steps(const Posterior<Scalar>& initial,
                                           const Trajectory<Scalar>& traj, StepFn&& step) {
    std::vector<StepResult<Scalar>> out;
    out.reserve(traj.steps());
    Posterior<Scalar> current = initial;
    for (std::size_t i = 0; i < traj.steps(); ++i) {
        const Vector<Scalar>& u = i < traj.inputs.size() ? traj.inputs[i] : Vector<Scalar>();
        try {
            out.push_back(step(current, u, traj.outputs[i]));
        } catch (const Error& e) {
            throw StepFailure(current.step + 1, e.what());
        }
        current = out.back().posterior;
    }
    return out;
}

}  // namespace detail

/// Runs a UKF variant over every measurement of `traj`.
template <typename Scalar>
std::vector<StepResult<Scalar>> run_filter(const FilterConfig& cfg, const NonlinearModel<Scalar>& model,
                                           const Posterior<Scalar>& initial,
                                           const Trajectory<Scalar>& traj) {
    auto step = [&](const Posterior<Scalar>& p, const Vector<Scalar>& u, const Vector<Scalar>& y) {
        switch (cfg.kind) {
            case FilterKind::UKF2: return ukf2_step(model, p, u, y, cfg.options);
            case FilterKind::UKF1: return ukf1_step(model, p, u, y, cfg.options);
            case FilterKind::MUKF: return mukf_step(model, p, u, y, cfg.options);
            case FilterKind::KF: break;
        }
        throw InvalidParameter("run_filter: the Kalman filter needs a linear model");
    };
    return detail::fold_steps(initial, traj, step);
}

/// Linear models accept every filter kind; the UKF variants see the model
/// through `as_nonlinear`.
template <typename Scalar>
std::vector<StepResult<Scalar>> run_filter(const FilterConfig& cfg, const LinearModel<Scalar>& model,
                                           const Posterior<Scalar>& initial,
                                           const Trajectory<Scalar>& traj) {
    if (cfg.kind != FilterKind::KF) {
        return run_filter(cfg, as_nonlinear(model), initial, traj);
    }
    auto step = [&](const Posterior<Scalar>& p, const Vector<Scalar>& u, const Vector<Scalar>& y) {
        return kf_step(model, p, u, y, cfg.options);
    };
    return detail::fold_steps(initial, traj, step);
}

}  // namespace mukf
