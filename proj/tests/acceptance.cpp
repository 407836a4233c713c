// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.
// Usage: acceptance [scratch-dir]
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mukf/harness.hpp"
#include "mukf/tolerances.hpp"
#include "sigma_properties.hpp"

using namespace mukf;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] %d. %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    failures += pass ? 0 : 1;
}

template <typename F>
double timed(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path scratch = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "mukf_acceptance";

    // 1-3 and 7 share one sweep: 100 systems x 50 steps x alpha in {0.5, 1, 1.5, 3},
    // plus 200 gain perturbations on each of the first 20 systems.
    VerifyConfig vcfg;
    vcfg.systems = 100;
    vcfg.steps = 50;
    vcfg.seed = 7;
    vcfg.gain_systems = 20;
    vcfg.gain_perturbations = 200;
    VerifyReport v;
    const double sweep_s = timed([&] { v = run_verification(vcfg); });

    report(1, "two-step UKF equals KF on linear systems",
           v.prop1_ok() && v.alpha_ok() && sweep_s < 30.0,
           fmt("max rel dP %.2e, max dK %.2e, max dx/(1+|x|) %.2e (limits %.0e); "
               "alpha spread dK %.2e dP %.2e; %.2f s (limit 30 s)",
               v.max_cov_rel_dev, v.max_gain_dev, v.max_state_dev, tol::kCovarianceDeviation,
               v.max_alpha_gain_dev, v.max_alpha_cov_dev, sweep_s));

    report(2, "one-step UKF deficit identities", v.prop2_ok() && sweep_s < 30.0,
           fmt("max |Pz - (Pz_kf - CQC^T)| %.2e, max |Pez - (Pez_kf - QC^T)| %.2e (limit %.0e); "
               "tr(P_ukf1) <= tr(P_kf) on %ld/%ld steps (informational)",
               v.max_pz_identity_dev, v.max_pez_identity_dev, tol::kDeficitIdentity,
               v.trace_inequality_holds, v.trace_inequality_total));

    report(3, "modified one-step UKF equals KF on linear systems", v.mukf_ok(),
           fmt("max rel dP %.2e (limit %.0e)", v.max_mukf_cov_rel_dev, tol::kMukfCovarianceDeviation));

    // 4 and 5: default benchmark runs.
    ExperimentConfig vdp_cfg;
    vdp_cfg.system = SystemId::Vdp;
    ExperimentConfig lorenz_cfg;
    lorenz_cfg.system = SystemId::Lorenz;
    ExperimentResult vdp, lorenz;
    const double vdp_s = timed([&] { vdp = run_experiment(vdp_cfg); });
    const double lorenz_s = timed([&] { lorenz = run_experiment(lorenz_cfg); });
    {
        const double vdp_max = vdp.report.mukf->run_max_abs;
        const double lor_max = lorenz.report.mukf->run_max_abs;
        const bool pass = vdp_max <= tol::kLinearOutputRelativeError &&
                          lor_max <= tol::kLinearOutputRelativeError && vdp_s < 10.0 && lorenz_s < 10.0;
        report(4, "MUKF recovers UKF2 on linear-output systems", pass,
               fmt("max |relerr_mukf| vdp %.2e over %zu steps (%.2f s), lorenz %.2e over %zu steps "
                   "(%.2f s); limit %.0e, 10 s",
                   vdp_max, vdp.records.size(), vdp_s, lor_max, lorenz.records.size(), lorenz_s,
                   tol::kLinearOutputRelativeError));
    }
    {
        const double e_vdp = vdp.report.ukf1->steady_state_mean;
        const double e_lor = lorenz.report.ukf1->steady_state_mean;
        const bool vdp_ok = e_vdp >= tol::kVdpBandLow && e_vdp <= tol::kVdpBandHigh;
        const bool lor_ok = e_lor >= tol::kLorenzBandLow && e_lor <= tol::kLorenzBandHigh;
        report(5, "steady-state UKF1 relative error magnitudes", vdp_ok && lor_ok,
               fmt("vdp %.4f in [%.2f, %.2f]: %s; lorenz %.4f in [%.2f, %.2f]: %s "
                   "(means over final %ld / %ld steps)",
                   e_vdp, tol::kVdpBandLow, tol::kVdpBandHigh, vdp_ok ? "yes" : "no", e_lor,
                   tol::kLorenzBandLow, tol::kLorenzBandHigh, lor_ok ? "yes" : "no", vdp.report.window,
                   lorenz.report.window));
    }

    // 6
    test::SigmaPropertyReport sp;
    const double sigma_s = timed([&] { sp = test::check_sigma_properties(1000, 2024); });
    report(6, "sigma-point invariants", sp.ok() && sigma_s < 10.0,
           fmt("%d instances: weight sum %.2e (1e-14), mean %.2e (1e-12), cov %.2e (1e-10), "
               "factor %.2e (1e-12), deviation mean %.2e (1e-13); %.2f s",
               sp.instances, sp.max_weight_sum_err, sp.max_mean_err, sp.max_cov_err, sp.max_factor_err,
               sp.max_deviation_mean, sigma_s));

    // 7
    report(7, "gain optimality under perturbation", v.gain_ok(),
           fmt("min tr P(K+dK) - tr P(K) = %.3e over %d x %d perturbations (floor -%.0e)",
               v.min_gain_margin, vcfg.gain_systems, vcfg.gain_perturbations, tol::kGainOptimalitySlack));

    // 8
    {
        bool same = false;
        std::string detail;
        try {
            fs::remove_all(scratch);
            reproduce(scratch / "first");
            reproduce(scratch / "second");
            same = true;
            for (const char* name : {"vdp.csv", "lorenz.csv"}) {
                const auto a = slurp(scratch / "first" / name);
                const auto b = slurp(scratch / "second" / name);
                same = same && !a.empty() && a == b;
                detail += fmt("%s %zu bytes %s; ", name, a.size(), a == b ? "identical" : "DIFFER");
            }
        } catch (const Error& e) {
            detail = e.what();
        }
        report(8, "reproduce is deterministic", same, detail);
    }

    std::printf("%d of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
