// Experiment runner, relative trace errors, CSV output and the linear-system
// verification sweep behind the command line tool.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mukf/filters.hpp"

namespace mukf {

/// Bad configuration: reported before any filter runs.
class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

enum class SystemId { Vdp, Lorenz, LinearRandom };

std::string_view to_string(SystemId id);
SystemId parse_system_id(std::string_view name);

/// Unset optionals take the per-system default (see `resolve`).
struct ExperimentConfig {
    SystemId system = SystemId::Vdp;
    std::vector<FilterKind> filters;
    std::optional<long> steps;
    std::uint64_t seed = 1;
    double alpha = 1.5;
    std::optional<double> ts;
    double mu = 1.2;
    double sigma = 10.0;
    double rho = 28.0;
    double beta = 8.0 / 3.0;
    std::optional<double> q_scale;
    std::optional<double> r_scale;
    std::vector<double> x0;
    std::vector<double> p0;
    double jitter = 0.0;
    long state_dim = 3;   // linear-random only
    long output_dim = 1;  // linear-random only
    std::string out;
};

/// Applies key=value settings (CLI flag names without the leading dashes).
/// Unknown keys and malformed values raise ConfigError.
void apply_settings(ExperimentConfig& cfg, const std::map<std::string, std::string>& settings);

/// Reads a key=value file; blank lines and lines starting with '#' are skipped.
std::map<std::string, std::string> read_settings_file(const std::filesystem::path& path);

/// A config with every default filled in and every override validated.
struct ResolvedExperiment {
    ExperimentConfig config;
    long steps = 0;
    double ts = 0.0;
    double q_scale = 0.0;
    double r_scale = 0.0;
    Vector<double> x0;
    Matrix<double> p0;
    std::optional<LinearModel<double>> linear;
    NonlinearModel<double> model;
};

ResolvedExperiment resolve(const ExperimentConfig& cfg);

struct FilterSnapshot {
    double trace_P = 0.0;
    Vector<double> mean;
    Vector<double> predicted_output;
    double innovation_norm = 0.0;
};

struct StepRecord {
    long step = 0;
    Vector<double> truth;
    Vector<double> measurement;
    std::vector<FilterSnapshot> filters;  // same order as ExperimentResult::filters
};

struct ErrorSummary {
    double steady_state_mean = 0.0;  // mean over the trailing window
    double window_max_abs = 0.0;     // max |e| over the trailing window
    double run_max_abs = 0.0;        // max |e| over the whole run
};

struct ComparisonReport {
    std::vector<double> relerr_ukf1;  // empty unless UKF1 and UKF2 both ran
    std::vector<double> relerr_mukf;  // empty unless MUKF and UKF2 both ran
    std::optional<ErrorSummary> ukf1;
    std::optional<ErrorSummary> mukf;
    long window = 0;
};

struct ExperimentResult {
    SystemId system = SystemId::Vdp;
    std::vector<FilterKind> filters;
    Eigen::Index state_dim = 0;
    Eigen::Index output_dim = 0;
    std::vector<StepRecord> records;
    ComparisonReport report;
};

/// (tr_s - tr_ref) / tr_ref
double relative_error(double trace_s, double trace_ref);

ErrorSummary summarize(const std::vector<double>& errors, long window);

/// Length of the trailing steady-state window for a run of `steps` steps.
long steady_state_window(long steps);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

void write_csv(const ExperimentResult& result, const std::filesystem::path& path);

/// Shortest round-trip-safe text for a double: 17 significant digits.
std::string format_double(double v);

struct ReproduceResult {
    ExperimentResult vdp;
    ExperimentResult lorenz;
};

/// Runs both benchmark systems with default settings and writes
/// `vdp.csv` and `lorenz.csv` into `out_dir`.
ReproduceResult reproduce(const std::filesystem::path& out_dir, std::uint64_t seed = 1);

struct VerifyConfig {
    int systems = 100;
    long steps = 50;
    std::uint64_t seed = 7;
    std::vector<double> alphas{0.5, 1.0, 1.5, 3.0};
    int gain_systems = 20;
    int gain_perturbations = 200;
};

struct VerifyReport {
    // Two-step UKF vs KF.
    double max_state_dev = 0.0;
    double max_gain_dev = 0.0;
    double max_cov_rel_dev = 0.0;
    // One-step UKF deficit identities.
    double max_pz_identity_dev = 0.0;
    double max_pez_identity_dev = 0.0;
    // Modified one-step UKF vs KF.
    double max_mukf_cov_rel_dev = 0.0;
    double max_mukf_state_dev = 0.0;
    // Two-step UKF across alpha.
    double max_alpha_gain_dev = 0.0;
    double max_alpha_cov_dev = 0.0;
    // min over perturbations of tr P(K + dK) - tr P(K)
    double min_gain_margin = 0.0;
    // tr P_ukf1 <= tr P_kf, counted over one-step comparisons; reported only.
    long trace_inequality_holds = 0;
    long trace_inequality_total = 0;
    long ukf1_gain_differs = 0;
    int systems = 0;

    bool prop1_ok() const;
    bool prop2_ok() const;
    bool mukf_ok() const;
    bool alpha_ok() const;
    bool gain_ok() const;
    bool ok() const;
};

VerifyReport run_verification(const VerifyConfig& cfg);

/// Quadratic form tr(P_prior - K Pez^T - Pez K^T + K Pz K^T).
double quadratic_posterior_trace(const Matrix<double>& prior_cov, const Matrix<double>& Pz,
                                 const Matrix<double>& Pez, const Matrix<double>& K);

/// Entry point of the command line tool. Exit codes: 0 success,
/// 1 verification failure, 2 usage or configuration error, 3 numerical failure.
int cli_main(int argc, const char* const* argv);

}  // namespace mukf
