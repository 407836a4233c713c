#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "mukf/harness.hpp"
#include "mukf/tolerances.hpp"

namespace mukf {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

void print_summary(const char* label, const std::optional<ErrorSummary>& s) {
    if (!s) {
        return;
    }
    std::printf("  %-6s steady-state relerr %+.6e  window max |e| %.3e  run max |e| %.3e\n", label,
                s->steady_state_mean, s->window_max_abs, s->run_max_abs);
}

void print_experiment(const ExperimentResult& r) {
    std::printf("%s: %zu steps, filters", std::string(to_string(r.system)).c_str(), r.records.size());
    for (auto k : r.filters) {
        std::printf(" %s", std::string(to_string(k)).c_str());
    }
    std::printf("\n");
    if (!r.records.empty()) {
        const auto& last = r.records.back();
        for (std::size_t f = 0; f < r.filters.size(); ++f) {
            std::printf("  final tr(P) %-5s %.10e\n", std::string(to_string(r.filters[f])).c_str(),
                        last.filters[f].trace_P);
        }
    }
    print_summary("ukf1", r.report.ukf1);
    print_summary("mukf", r.report.mukf);
}

void print_verify(const VerifyReport& r) {
    auto line = [](const char* what, double value, double limit, bool ok) {
        std::printf("%-44s %.3e  (limit %.0e)  %s\n", what, value, limit, ok ? "ok" : "FAIL");
    };
    std::printf("verified %d random linear systems\n", r.systems);
    line("ukf2 vs kf: max state deviation", r.max_state_dev, tol::kStateDeviation,
         r.max_state_dev <= tol::kStateDeviation);
    line("ukf2 vs kf: max gain deviation", r.max_gain_dev, tol::kGainDeviation,
         r.max_gain_dev <= tol::kGainDeviation);
    line("ukf2 vs kf: max relative covariance deviation", r.max_cov_rel_dev, tol::kCovarianceDeviation,
         r.max_cov_rel_dev <= tol::kCovarianceDeviation);
    line("ukf1: max |Pz - (Pz_kf - C Q C^T)|", r.max_pz_identity_dev, tol::kDeficitIdentity,
         r.max_pz_identity_dev <= tol::kDeficitIdentity);
    line("ukf1: max |Pez - (Pez_kf - Q C^T)|", r.max_pez_identity_dev, tol::kDeficitIdentity,
         r.max_pez_identity_dev <= tol::kDeficitIdentity);
    line("mukf vs kf: max relative covariance deviation", r.max_mukf_cov_rel_dev,
         tol::kMukfCovarianceDeviation, r.max_mukf_cov_rel_dev <= tol::kMukfCovarianceDeviation);
    line("mukf vs kf: max state deviation", r.max_mukf_state_dev, tol::kStateDeviation,
         r.max_mukf_state_dev <= tol::kStateDeviation);
    line("ukf2 across alpha: max gain deviation", r.max_alpha_gain_dev, tol::kAlphaInvariance,
         r.max_alpha_gain_dev <= tol::kAlphaInvariance);
    line("ukf2 across alpha: max covariance deviation", r.max_alpha_cov_dev, tol::kAlphaInvariance,
         r.max_alpha_cov_dev <= tol::kAlphaInvariance);
    std::printf("%-44s %+.3e  (floor -%.0e)  %s\n", "gain optimality: min trace margin",
                r.min_gain_margin, tol::kGainOptimalitySlack, r.gain_ok() ? "ok" : "FAIL");
    std::printf("ukf1 gain differs from kf gain: %ld of %ld steps\n", r.ukf1_gain_differs,
                r.trace_inequality_total);
    std::printf("tr(P_ukf1) <= tr(P_kf) observed: %ld of %ld steps (informational)\n",
                r.trace_inequality_holds, r.trace_inequality_total);
    std::printf("%s\n", r.ok() ? "PASS" : "FAIL");
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Kalman filter and unscented Kalman filter variants: benchmark and verification tool"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run filters on one system and optionally write a CSV");
    std::map<std::string, std::string> flags;
    const std::pair<const char*, const char*> run_keys[] = {
        {"system", "vdp | lorenz | linear-random"},
        {"filters", "comma list of kf, ukf2, ukf1, mukf"},
        {"steps", "number of filter steps"},
        {"seed", "RNG seed"},
        {"alpha", "sigma-point spread, > 0"},
        {"ts", "sample time"},
        {"q-scale", "process noise scale"},
        {"r-scale", "measurement noise scale"},
        {"x0", "initial state, comma separated"},
        {"p0", "initial covariance: 1, n or n*n values"},
        {"out", "CSV output path"},
        {"jitter", "diagonal jitter retried on a failed factorization (0 = off)"},
    };
    for (const auto& [key, help] : run_keys) {
        run->add_option_function<std::string>(
            std::string("--") + key, [&flags, key](const std::string& v) { flags[key] = v; }, help);
    }
    std::string config_path;
    run->add_option("--config", config_path, "key=value settings file; command line flags win");

    // verify
    auto* verify = app.add_subcommand("verify", "Check the linear-system equivalences on random systems");
    VerifyConfig vcfg;
    verify->add_option("--systems", vcfg.systems, "number of random systems")->check(CLI::PositiveNumber);
    verify->add_option("--seed", vcfg.seed, "sweep seed");
    verify->add_option("--steps", vcfg.steps, "steps per system")->check(CLI::PositiveNumber);

    // reproduce
    auto* repro = app.add_subcommand("reproduce", "Run the Van der Pol and Lorenz benchmarks, write CSVs");
    std::string out_dir = ".";
    std::uint64_t repro_seed = 1;
    repro->add_option("--out", out_dir, "output directory");
    repro->add_option("--seed", repro_seed, "experiment seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*run) {
            ExperimentConfig cfg;
            if (!config_path.empty()) {
                auto settings = read_settings_file(config_path);
                for (const auto& [k, v] : flags) {
                    settings[k] = v;
                }
                apply_settings(cfg, settings);
            } else {
                apply_settings(cfg, flags);
            }
            resolve(cfg);  // reject bad configs before any work
            const auto result = run_experiment(cfg);
            if (!cfg.out.empty()) {
                write_csv(result, cfg.out);
            }
            print_experiment(result);
            return kExitOk;
        }
        if (*verify) {
            const auto report = run_verification(vcfg);
            print_verify(report);
            return report.ok() ? kExitOk : kExitVerifyFailed;
        }
        if (*repro) {
            const auto r = reproduce(out_dir, repro_seed);
            print_experiment(r.vdp);
            print_experiment(r.lorenz);
            std::printf("wrote %s and %s\n", (std::filesystem::path(out_dir) / "vdp.csv").string().c_str(),
                        (std::filesystem::path(out_dir) / "lorenz.csv").string().c_str());
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitUsage;
}

}  // namespace mukf
