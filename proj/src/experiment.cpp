#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "mukf/harness.hpp"
#include "mukf/tolerances.hpp"

namespace mukf {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto end = comma == std::string_view::npos ? s.size() : comma;
        parts.push_back(trim(s.substr(start, end - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return parts;
}

double parse_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw ConfigError("invalid number for '" + key + "': '" + text + "'");
    }
    return v;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& text) {
    Int v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError("invalid integer for '" + key + "': '" + text + "'");
    }
    return v;
}

std::vector<double> parse_doubles(const std::string& key, const std::string& text) {
    std::vector<double> out;
    for (const auto& part : split_list(text)) {
        out.push_back(parse_double(key, part));
    }
    return out;
}

std::vector<FilterKind> default_filters(SystemId id) {
    if (id == SystemId::LinearRandom) {
        return {FilterKind::KF, FilterKind::UKF2, FilterKind::UKF1, FilterKind::MUKF};
    }
    return {FilterKind::UKF2, FilterKind::UKF1, FilterKind::MUKF};
}

template <typename T>
long index_of(const std::vector<T>& v, const T& x) {
    const auto it = std::find(v.begin(), v.end(), x);
    return it == v.end() ? -1 : static_cast<long>(it - v.begin());
}

}  // namespace

std::string_view to_string(SystemId id) {
    switch (id) {
        case SystemId::Vdp: return "vdp";
        case SystemId::Lorenz: return "lorenz";
        case SystemId::LinearRandom: return "linear-random";
    }
    return "?";
}

SystemId parse_system_id(std::string_view name) {
    if (name == "vdp") return SystemId::Vdp;
    if (name == "lorenz") return SystemId::Lorenz;
    if (name == "linear-random") return SystemId::LinearRandom;
    throw ConfigError("unknown system '" + std::string(name) + "'");
}

void apply_settings(ExperimentConfig& cfg, const std::map<std::string, std::string>& settings) {
    for (const auto& [raw_key, value] : settings) {
        std::string key = raw_key;
        std::replace(key.begin(), key.end(), '_', '-');
        if (key == "system") {
            cfg.system = parse_system_id(value);
        } else if (key == "filters") {
            cfg.filters.clear();
            for (const auto& name : split_list(value)) {
                try {
                    const auto kind = parse_filter_kind(name);
                    if (index_of(cfg.filters, kind) < 0) {
                        cfg.filters.push_back(kind);
                    }
                } catch (const InvalidParameter& e) {
                    throw ConfigError(e.what());
                }
            }
        } else if (key == "steps") {
            cfg.steps = parse_int<long>(key, value);
        } else if (key == "seed") {
            cfg.seed = parse_int<std::uint64_t>(key, value);
        } else if (key == "alpha") {
            cfg.alpha = parse_double(key, value);
        } else if (key == "ts") {
            cfg.ts = parse_double(key, value);
        } else if (key == "mu") {
            cfg.mu = parse_double(key, value);
        } else if (key == "sigma") {
            cfg.sigma = parse_double(key, value);
        } else if (key == "rho") {
            cfg.rho = parse_double(key, value);
        } else if (key == "beta") {
            cfg.beta = parse_double(key, value);
        } else if (key == "q-scale") {
            cfg.q_scale = parse_double(key, value);
        } else if (key == "r-scale") {
            cfg.r_scale = parse_double(key, value);
        } else if (key == "x0") {
            cfg.x0 = parse_doubles(key, value);
        } else if (key == "p0") {
            cfg.p0 = parse_doubles(key, value);
        } else if (key == "jitter") {
            cfg.jitter = parse_double(key, value);
        } else if (key == "state-dim") {
            cfg.state_dim = parse_int<long>(key, value);
        } else if (key == "output-dim") {
            cfg.output_dim = parse_int<long>(key, value);
        } else if (key == "out") {
            cfg.out = value;
        } else {
            throw ConfigError("unknown setting '" + raw_key + "'");
        }
    }
}

std::map<std::string, std::string> read_settings_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    std::map<std::string, std::string> settings;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
        }
        settings[trim(std::string_view(t).substr(0, eq))] = trim(std::string_view(t).substr(eq + 1));
    }
    return settings;
}

ResolvedExperiment resolve(const ExperimentConfig& cfg) {
    ResolvedExperiment r;
    r.config = cfg;
    if (r.config.filters.empty()) {
        r.config.filters = default_filters(cfg.system);
    }
    const bool linear = cfg.system == SystemId::LinearRandom;
    r.steps = cfg.steps.value_or(cfg.system == SystemId::Vdp      ? 5000
                                 : cfg.system == SystemId::Lorenz ? 3000
                                                                  : 50);
    r.ts = cfg.ts.value_or(0.01);
    r.q_scale = cfg.q_scale.value_or(linear ? 1.0 : 0.01);
    r.r_scale = cfg.r_scale.value_or(linear ? 1.0 : 1e-4);

    if (r.steps < 1) {
        throw ConfigError("steps must be at least 1");
    }
    if (!(cfg.alpha > 0.0)) {
        throw ConfigError("alpha must be positive");
    }
    if (!(r.ts > 0.0)) {
        throw ConfigError("ts must be positive");
    }
    if (!(r.q_scale >= 0.0)) {
        throw ConfigError("q-scale must be non-negative");
    }
    if (!(r.r_scale > 0.0)) {
        throw ConfigError("r-scale must be positive");
    }
    if (!(cfg.jitter >= 0.0)) {
        throw ConfigError("jitter must be non-negative");
    }
    if (!linear && index_of(r.config.filters, FilterKind::KF) >= 0) {
        throw ConfigError("the kf filter needs a linear system (use --system linear-random)");
    }

    switch (cfg.system) {
        case SystemId::Vdp:
            r.model = vdp_model<double>(r.ts, cfg.mu, r.q_scale, r.r_scale);
            break;
        case SystemId::Lorenz:
            r.model = lorenz_model<double>(r.ts, cfg.sigma, cfg.rho, cfg.beta, r.q_scale, r.r_scale);
            break;
        case SystemId::LinearRandom: {
            if (cfg.state_dim < 1 || cfg.output_dim < 1 || cfg.output_dim > cfg.state_dim) {
                throw ConfigError("linear-random needs 1 <= output-dim <= state-dim");
            }
            auto lin = random_linear_model<double>(cfg.seed, cfg.state_dim, cfg.output_dim);
            lin.Q = [Q = lin.Q, s = r.q_scale](long k) -> Matrix<double> { return s * Q(k); };
            lin.R = [R = lin.R, s = r.r_scale](long k) -> Matrix<double> { return s * R(k); };
            r.model = as_nonlinear(lin);
            r.linear = std::move(lin);
            break;
        }
    }

    const Eigen::Index n = r.model.state_dim;
    if (cfg.x0.empty()) {
        r.x0 = Vector<double>::Ones(n);
    } else if (static_cast<Eigen::Index>(cfg.x0.size()) == n) {
        r.x0 = Eigen::Map<const Vector<double>>(cfg.x0.data(), n);
    } else {
        throw ConfigError("x0 needs " + std::to_string(n) + " entries");
    }

    const auto np = static_cast<Eigen::Index>(cfg.p0.size());
    if (np == 0) {
        r.p0 = Matrix<double>::Identity(n, n);
    } else if (np == 1) {
        r.p0 = cfg.p0[0] * Matrix<double>::Identity(n, n);
    } else if (np == n) {
        r.p0 = Eigen::Map<const Vector<double>>(cfg.p0.data(), n).asDiagonal();
    } else if (np == n * n) {
        r.p0 = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            cfg.p0.data(), n, n);
    } else {
        throw ConfigError("p0 needs 1, n or n*n entries");
    }
    try {
        spd_factor(r.p0);
    } catch (const Error&) {
        throw ConfigError("p0 must be symmetric positive definite");
    }
    return r;
}

double relative_error(double trace_s, double trace_ref) {
    if (!(trace_ref > 0.0)) {
        throw InvalidParameter("relative_error: reference trace must be positive");
    }
    return (trace_s - trace_ref) / trace_ref;
}

long steady_state_window(long steps) {
    return std::max(1L, static_cast<long>(std::ceil(tol::kSteadyStateFraction * double(steps))));
}

ErrorSummary summarize(const std::vector<double>& errors, long window) {
    ErrorSummary s;
    if (errors.empty()) {
        return s;
    }
    const auto n = static_cast<long>(errors.size());
    window = std::clamp(window, 1L, n);
    double sum = 0.0;
    for (long i = n - window; i < n; ++i) {
        sum += errors[i];
        s.window_max_abs = std::max(s.window_max_abs, std::abs(errors[i]));
    }
    s.steady_state_mean = sum / double(window);
    for (double e : errors) {
        s.run_max_abs = std::max(s.run_max_abs, std::abs(e));
    }
    return s;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    const ResolvedExperiment r = resolve(cfg);
    const auto traj = simulate_truth(r.model, r.x0, r.steps, cfg.seed);
    const Posterior<double> initial{r.x0, r.p0, 0};
    const FilterOptions opts{cfg.alpha, cfg.jitter};

    ExperimentResult out;
    out.system = cfg.system;
    out.filters = r.config.filters;
    out.state_dim = r.model.state_dim;
    out.output_dim = r.model.output_dim;
    out.records.resize(r.steps);
    for (long k = 0; k < r.steps; ++k) {
        auto& rec = out.records[k];
        rec.step = k + 1;
        rec.truth = traj.states[k + 1];
        rec.measurement = traj.outputs[k];
        rec.filters.resize(out.filters.size());
    }

    for (std::size_t f = 0; f < out.filters.size(); ++f) {
        const FilterConfig fc{out.filters[f], opts};
        const auto results = r.linear ? run_filter(fc, *r.linear, initial, traj)
                                      : run_filter(fc, r.model, initial, traj);
        for (long k = 0; k < r.steps; ++k) {
            auto& snap = out.records[k].filters[f];
            const auto& res = results[k];
            snap.trace_P = res.posterior.cov.trace();
            snap.mean = res.posterior.mean;
            snap.predicted_output = res.diagnostics.predicted_output;
            snap.innovation_norm = res.diagnostics.innovation.norm();
        }
    }

    const long ref = index_of(out.filters, FilterKind::UKF2);
    const long window = steady_state_window(r.steps);
    out.report.window = window;
    if (ref >= 0) {
        auto compare = [&](FilterKind kind, std::vector<double>& errors,
                           std::optional<ErrorSummary>& summary) {
            const long idx = index_of(out.filters, kind);
            if (idx < 0) {
                return;
            }
            errors.reserve(r.steps);
            for (const auto& rec : out.records) {
                errors.push_back(relative_error(rec.filters[idx].trace_P, rec.filters[ref].trace_P));
            }
            summary = summarize(errors, window);
        };
        compare(FilterKind::UKF1, out.report.relerr_ukf1, out.report.ukf1);
        compare(FilterKind::MUKF, out.report.relerr_mukf, out.report.mukf);
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, ptr);
}

void write_csv(const ExperimentResult& result, const std::filesystem::path& path) {
    std::ostringstream os;
    const auto n = result.state_dim;
    const auto p = result.output_dim;
    os << "step";
    for (Eigen::Index i = 1; i <= n; ++i) os << ",truth_" << i;
    for (Eigen::Index i = 1; i <= p; ++i) os << ",y_" << i;
    for (const auto kind : result.filters) {
        const auto name = to_string(kind);
        os << ',' << name << "_trace_P";
        for (Eigen::Index i = 1; i <= n; ++i) os << ',' << name << "_xhat_" << i;
        os << ',' << name << "_innov_norm";
    }
    const bool has_ref = index_of(result.filters, FilterKind::UKF2) >= 0;
    const bool ukf1 = has_ref && index_of(result.filters, FilterKind::UKF1) >= 0;
    const bool mukf = has_ref && index_of(result.filters, FilterKind::MUKF) >= 0;
    if (ukf1) os << ",relerr_ukf1";
    if (mukf) os << ",relerr_mukf";
    os << '\n';

    for (std::size_t k = 0; k < result.records.size(); ++k) {
        const auto& rec = result.records[k];
        os << rec.step;
        for (Eigen::Index i = 0; i < rec.truth.size(); ++i) os << ',' << format_double(rec.truth(i));
        for (Eigen::Index i = 0; i < rec.measurement.size(); ++i)
            os << ',' << format_double(rec.measurement(i));
        for (const auto& snap : rec.filters) {
            os << ',' << format_double(snap.trace_P);
            for (Eigen::Index i = 0; i < snap.mean.size(); ++i) os << ',' << format_double(snap.mean(i));
            os << ',' << format_double(snap.innovation_norm);
        }
        if (ukf1) os << ',' << format_double(result.report.relerr_ukf1[k]);
        if (mukf) os << ',' << format_double(result.report.relerr_mukf[k]);
        os << '\n';
    }

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    const std::string text = os.str();
    file.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!file) {
        throw IoError("failed writing " + path.string());
    }
}

ReproduceResult reproduce(const std::filesystem::path& out_dir, std::uint64_t seed) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    }
    ExperimentConfig vdp;
    vdp.system = SystemId::Vdp;
    vdp.seed = seed;
    ExperimentConfig lorenz;
    lorenz.system = SystemId::Lorenz;
    lorenz.seed = seed;

    ReproduceResult out{run_experiment(vdp), run_experiment(lorenz)};
    write_csv(out.vdp, out_dir / "vdp.csv");
    write_csv(out.lorenz, out_dir / "lorenz.csv");
    return out;
}

}  // namespace mukf
