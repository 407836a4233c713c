#include <algorithm>
#include <cmath>
#include <limits>

#include "mukf/harness.hpp"
#include "mukf/tolerances.hpp"

namespace mukf {

bool VerifyReport::prop1_ok() const {
    return max_state_dev <= tol::kStateDeviation && max_gain_dev <= tol::kGainDeviation &&
           max_cov_rel_dev <= tol::kCovarianceDeviation;
}

bool VerifyReport::prop2_ok() const {
    return max_pz_identity_dev <= tol::kDeficitIdentity &&
           max_pez_identity_dev <= tol::kDeficitIdentity;
}

bool VerifyReport::mukf_ok() const {
    return max_mukf_cov_rel_dev <= tol::kMukfCovarianceDeviation &&
           max_mukf_state_dev <= tol::kStateDeviation;
}

bool VerifyReport::alpha_ok() const {
    return max_alpha_gain_dev <= tol::kAlphaInvariance && max_alpha_cov_dev <= tol::kAlphaInvariance;
}

bool VerifyReport::gain_ok() const { return min_gain_margin >= -tol::kGainOptimalitySlack; }

bool VerifyReport::ok() const {
    return prop1_ok() && prop2_ok() && mukf_ok() && alpha_ok() && gain_ok();
}

double quadratic_posterior_trace(const Matrix<double>& prior_cov, const Matrix<double>& Pz,
                                 const Matrix<double>& Pez, const Matrix<double>& K) {
    return prior_cov.trace() - 2.0 * (K * Pez.transpose()).trace() + (K * Pz * K.transpose()).trace();
}

namespace {

struct LinearCase {
    LinearModel<double> model;
    Posterior<double> initial;
    Trajectory<double> traj;
};

// n in 1..4, p in 1..n, one random input channel driven by a normal sequence.
LinearCase make_case(std::uint64_t seed, long steps) {
    NormalStream rng(seed, 0x21);
    const auto n = static_cast<Eigen::Index>(1 + rng.next_u64() % 4);
    const auto p = static_cast<Eigen::Index>(1 + rng.next_u64() % static_cast<std::uint64_t>(n));
    LinearCase c{random_linear_model<double>(seed, n, p), {}, {}};
    c.initial.mean = rng.normal_vector(n);
    c.initial.cov = random_spd<double>(rng, n);
    c.initial.step = 0;
    std::vector<Vector<double>> inputs;
    inputs.reserve(steps);
    for (long k = 0; k < steps; ++k) {
        inputs.push_back(rng.normal_vector(1));
    }
    const Vector<double> x_true = c.initial.mean + rng.normal_vector(n);
    c.traj = simulate_truth(c.model, x_true, steps, seed,
                            std::optional<std::vector<Vector<double>>>(std::move(inputs)));
    return c;
}

double rel_frob(const Matrix<double>& a, const Matrix<double>& ref) {
    return (a - ref).norm() / ref.norm();
}

}  // namespace

VerifyReport run_verification(const VerifyConfig& cfg) {
    VerifyReport rep;
    rep.systems = cfg.systems;
    rep.min_gain_margin = std::numeric_limits<double>::infinity();
    NormalStream seeds(cfg.seed, 0xA5);

    for (int s = 0; s < cfg.systems; ++s) {
        const std::uint64_t sys_seed = seeds.next_u64();
        const LinearCase c = make_case(sys_seed, cfg.steps);
        const auto nl = as_nonlinear(c.model);
        const auto kf = run_filter(FilterConfig{FilterKind::KF, {}}, c.model, c.initial, c.traj);

        std::vector<StepResult<double>> ukf2_first;
        for (double alpha : cfg.alphas) {
            const FilterOptions opts{alpha, 0.0};
            const auto ukf2 = run_filter(FilterConfig{FilterKind::UKF2, opts}, nl, c.initial, c.traj);
            const auto mukf = run_filter(FilterConfig{FilterKind::MUKF, opts}, nl, c.initial, c.traj);
            for (std::size_t k = 0; k < kf.size(); ++k) {
                const auto& ref = kf[k];
                const double xnorm = 1.0 + ref.posterior.mean.norm();
                rep.max_state_dev = std::max(
                    rep.max_state_dev, (ukf2[k].posterior.mean - ref.posterior.mean).norm() / xnorm);
                rep.max_gain_dev = std::max(
                    rep.max_gain_dev, (ukf2[k].diagnostics.gain - ref.diagnostics.gain).norm());
                rep.max_cov_rel_dev = std::max(
                    rep.max_cov_rel_dev, rel_frob(ukf2[k].posterior.cov, ref.posterior.cov));
                rep.max_mukf_cov_rel_dev = std::max(
                    rep.max_mukf_cov_rel_dev, rel_frob(mukf[k].posterior.cov, ref.posterior.cov));
                rep.max_mukf_state_dev = std::max(
                    rep.max_mukf_state_dev, (mukf[k].posterior.mean - ref.posterior.mean).norm() / xnorm);

                // One-step UKF started from the KF posterior of the previous step.
                const Posterior<double>& prev = k == 0 ? c.initial : kf[k - 1].posterior;
                const auto one = ukf1_step(nl, prev, c.traj.inputs[k], c.traj.outputs[k], opts);
                const long step = prev.step;
                const Matrix<double> C = c.model.C(step + 1);
                const Matrix<double> Q = c.model.Q(step);
                rep.max_pz_identity_dev = std::max(
                    rep.max_pz_identity_dev,
                    (one.diagnostics.Pz - (ref.diagnostics.Pz - C * Q * C.transpose())).norm());
                rep.max_pez_identity_dev = std::max(
                    rep.max_pez_identity_dev,
                    (one.diagnostics.Pez - (ref.diagnostics.Pez - Q * C.transpose())).norm());
                ++rep.trace_inequality_total;
                if (one.posterior.cov.trace() <= ref.posterior.cov.trace()) {
                    ++rep.trace_inequality_holds;
                }
                if ((one.diagnostics.gain - ref.diagnostics.gain).norm() > tol::kGainDeviation) {
                    ++rep.ukf1_gain_differs;
                }
            }
            if (ukf2_first.empty()) {
                ukf2_first = ukf2;
            } else {
                for (std::size_t k = 0; k < ukf2.size(); ++k) {
                    rep.max_alpha_gain_dev =
                        std::max(rep.max_alpha_gain_dev,
                                 (ukf2[k].diagnostics.gain - ukf2_first[k].diagnostics.gain).norm());
                    rep.max_alpha_cov_dev = std::max(
                        rep.max_alpha_cov_dev, (ukf2[k].posterior.cov - ukf2_first[k].posterior.cov).norm());
                }
            }
        }

        if (s < cfg.gain_systems && !kf.empty()) {
            NormalStream rng(sys_seed, 0x31);
            const auto& d = kf.back().diagnostics;
            const double base = quadratic_posterior_trace(d.prior_cov, d.Pz, d.Pez, d.gain);
            for (int i = 0; i < cfg.gain_perturbations; ++i) {
                // Perturbation sizes log-uniform over [1e-6, 10].
                const double scale = std::pow(10.0, -6.0 + 7.0 * rng.uniform());
                const Matrix<double> dK = scale * rng.normal_matrix(d.gain.rows(), d.gain.cols());
                const double perturbed = quadratic_posterior_trace(d.prior_cov, d.Pz, d.Pez, d.gain + dK);
                rep.min_gain_margin = std::min(rep.min_gain_margin, perturbed - base);
            }
        }
    }
    if (!std::isfinite(rep.min_gain_margin)) {
        rep.min_gain_margin = 0.0;
    }
    return rep;
}

}  // namespace mukf
