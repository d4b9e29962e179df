#include "parsim/harness.hpp"

#include "parsim/data_assembly.hpp"
#include "parsim/estimators.hpp"
#include "parsim/linalg.hpp"
#include "parsim/parallel.hpp"
#include "parsim/realization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace parsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

const char* estimator_name(EstimatorChoice e) {
    switch (e) {
        case EstimatorChoice::parsim: return "parsim";
        case EstimatorChoice::classical: return "classical";
        case EstimatorChoice::both: return "both";
    }
    return "parsim";
}

StateSpaceModel effective_model(const ExperimentConfig& cfg) {
    StateSpaceModel m = cfg.model;
    if (cfg.noiseless) m.sigma_e = 0.0;
    return m;
}

template <typename T>
T required(const Json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("config is missing key '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

template <typename T>
T optional_key(const Json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

// Errors of one realized estimate against the truth; fills status on failure.
struct RealizedErrors {
    double gammalp = kNaN, a = kNaN, b = kNaN, c = kNaN, k = kNaN, gap = kNaN;
    std::string status = "ok";
};

RealizedErrors realize_and_align(const StateSpaceModel& truth, const Matrix& est, const Matrix& true_gamma_lp,
                                 Index p, Index f) {
    RealizedErrors out;
    out.gammalp = linalg::spectral_norm(est - true_gamma_lp);
    try {
        RealizationResult r = svd_realize(est, truth.nx());
        out.gap = r.sigma_gap;
        extract_system(r, p, f, truth.nx(), truth.nu(), truth.ny());
        const AlignmentResult al = align_similarity(truth, f, r);
        out.a = al.err_A;
        out.b = al.err_B;
        out.c = al.err_C;
        out.k = al.err_K;
    } catch (const RankDeficiencyError&) {
        out.status = "rank_deficient";
    } catch (const ExtractionError&) {
        out.status = "extraction_failed";
    } catch (const AlignmentError&) {
        out.status = "alignment_failed";
    }
    return out;
}

bool row_covered(const SweepRow& row, const std::vector<BoundReport>& reports) {
    if (reports.size() != row.theta_errors.size()) throw ArgumentError("coverage: row/report size mismatch");
    for (std::size_t k = 0; k < reports.size(); ++k) {
        const double err2 = row.theta_errors[k] * row.theta_errors[k];
        if (!(err2 <= reports[k].theta2)) return false;
    }
    return true;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Json number_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

double metric_value(const SweepRow& row, const std::string& name) {
    if (name == "err_theta_max") return row.err_theta_max;
    if (name == "err_gammalp") return row.err_gammalp;
    if (name == "err_A") return row.err_A;
    if (name == "err_B") return row.err_B;
    if (name == "err_C") return row.err_C;
    if (name == "err_K") return row.err_K;
    if (name == "pe_margin") return row.pe_margin;
    if (name == "sigma_gap") return row.sigma_gap;
    return kNaN;
}

}  // namespace

// ---- configuration ----

StateSpaceModel fixture_by_name(const std::string& name) {
    if (name == "S1") return fixture_s1();
    throw ConfigError("unknown model fixture '" + name + "'");
}

void ExperimentConfig::validate() const {
    model.check_dimensions();
    const ValidationReport rep = validate_model(model, ValidationOptions{noiseless || model.sigma_e == 0.0});
    if (!rep.passed) throw ConfigError("model fails validation: " + rep.diagnostics);
    if (model.sigma_e == 0.0 && !noiseless) throw ConfigError("sigma_e = 0 requires \"noiseless\": true");
    if (f < 1) throw ConfigError("f must be at least 1");
    if (f * model.ny() < model.nx() + model.ny()) throw ConfigError("f * ny must be at least nx + ny");
    if (p_fixed && *p_fixed < 1) throw ConfigError("fixed p_rule must be at least 1");
    if (!p_fixed && beta_grid.empty()) throw ConfigError("assumption2 p_rule needs a non-empty beta_grid");
    if (n_grid.empty()) throw ConfigError("N_grid must not be empty");
    for (std::size_t k = 0; k < n_grid.size(); ++k) {
        if (n_grid[k] < 1) throw ConfigError("N_grid entries must be positive");
        if (k > 0 && n_grid[k] <= n_grid[k - 1]) throw ConfigError("N_grid must be strictly increasing");
    }
    if (trials < 1) throw ConfigError("trials must be at least 1");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    if (!(c > 0.0) || !(c0 > 0.0)) throw ConfigError("constants c and c0 must be positive");
}

ExperimentConfig config_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig cfg;
    if (!j.contains("model")) throw ConfigError("config is missing key 'model'");
    const Json& mj = j.at("model");
    if (mj.is_string()) {
        cfg.model_name = mj.get<std::string>();
        cfg.model = fixture_by_name(cfg.model_name);
    } else {
        cfg.model = model_from_json(mj);
        cfg.model_name = "inline";
    }
    cfg.noiseless = optional_key<bool>(j, "noiseless", false);
    cfg.f = optional_key<Index>(j, "f", 2 * cfg.model.nx() + 1);

    if (!j.contains("p_rule")) throw ConfigError("config is missing key 'p_rule'");
    const Json& pr = j.at("p_rule");
    if (pr.is_number_integer()) {
        cfg.p_fixed = pr.get<Index>();
    } else if (pr.is_string() && pr.get<std::string>() == "assumption2") {
        cfg.beta_grid = required<std::vector<double>>(j, "beta_grid");
    } else {
        throw ConfigError("p_rule must be an integer or \"assumption2\"");
    }
    cfg.n_grid = required<std::vector<long long>>(j, "N_grid");
    cfg.trials = required<int>(j, "trials");
    cfg.delta = optional_key<double>(j, "delta", 0.05);
    cfg.base_seed = optional_key<std::uint64_t>(j, "base_seed", 0);
    cfg.c = optional_key<double>(j, "c", 1.0);
    cfg.c0 = optional_key<double>(j, "c0", 1.0);
    const auto est = optional_key<std::string>(j, "estimator", "parsim");
    if (est == "parsim") cfg.estimator = EstimatorChoice::parsim;
    else if (est == "classical") cfg.estimator = EstimatorChoice::classical;
    else if (est == "both") cfg.estimator = EstimatorChoice::both;
    else throw ConfigError("estimator must be parsim, classical or both");
    cfg.output_dir = optional_key<std::string>(j, "output_dir", "sweep_out");
    cfg.threads = optional_key<unsigned>(j, "threads", 0u);
    cfg.bounds = optional_key<bool>(j, "bounds", true);
    cfg.validate();
    return cfg;
}

Json config_to_json(const ExperimentConfig& cfg) {
    Json j;
    if (cfg.model_name != "inline") j["model"] = cfg.model_name;
    else j["model"] = model_to_json(cfg.model);
    j["noiseless"] = cfg.noiseless;
    j["f"] = cfg.f;
    if (cfg.p_fixed) {
        j["p_rule"] = *cfg.p_fixed;
    } else {
        j["p_rule"] = "assumption2";
        j["beta_grid"] = cfg.beta_grid;
    }
    j["N_grid"] = cfg.n_grid;
    j["trials"] = cfg.trials;
    j["delta"] = cfg.delta;
    j["base_seed"] = cfg.base_seed;
    j["c"] = cfg.c;
    j["c0"] = cfg.c0;
    j["estimator"] = estimator_name(cfg.estimator);
    j["output_dir"] = cfg.output_dir;
    j["threads"] = cfg.threads;
    j["bounds"] = cfg.bounds;
    return j;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::exception& ex) {
        throw ConfigError(std::string("invalid config JSON: ") + ex.what());
    }
    return config_from_json(j);
}

std::uint64_t trial_seed(std::uint64_t base_seed, long long n, int trial) {
    const std::uint64_t h = splitmix64(splitmix64(static_cast<std::uint64_t>(n)) ^ static_cast<std::uint64_t>(trial));
    return base_seed ^ h;
}

Index past_horizon_for(const ExperimentConfig& cfg, long long n) {
    if (cfg.p_fixed) return *cfg.p_fixed;
    return choose_past_horizon(effective_model(cfg), n, cfg.beta_grid).p;
}

// ---- trials ----

SweepRow run_trial(const ExperimentConfig& cfg, long long n, int trial) {
    SweepRow row;
    row.n = n;
    row.trial = trial;
    row.seed = trial_seed(cfg.base_seed, n, trial);
    row.err_theta_max = row.err_gammalp = row.err_A = row.err_B = row.err_C = row.err_K = kNaN;
    row.pe_margin = row.sigma_gap = kNaN;
    row.cl_err_gammalp = row.cl_err_A = row.cl_err_B = row.cl_err_C = row.cl_err_K = kNaN;

    const StateSpaceModel truth = effective_model(cfg);
    const Index f = cfg.f;
    try {
        row.p = past_horizon_for(cfg, n);
    } catch (const HorizonInfeasibleError&) {
        row.status = "horizon_infeasible";
        return row;
    }
    const Index p = row.p;

    const Trajectory traj = simulate(truth, p + f + static_cast<Index>(n) - 1, row.seed, cfg.noiseless);
    const HankelBundle h = build_hankels(traj, p, f, static_cast<Index>(n));
    const RegressorBank bank = build_regressor_bank(h);
    const Matrix true_gamma_lp = extended_observability(truth, f) * extended_controllability(truth, p);

    row.pe_margin = pe_check(empirical_covariance(bank, f), covariate_covariance(truth, p, f, row_tau(p, f))).margin;

    bool parsim_ok = false;
    if (cfg.estimator != EstimatorChoice::classical) {
        try {
            const ArxBankEstimate est = estimate_parsim_bank(bank, 1);
            double worst = 0.0;
            for (Index i = 1; i <= f; ++i) {
                const double e = linalg::spectral_norm(est.row(i) - true_theta(truth, p, i));
                row.theta_errors.push_back(e);
                worst = std::max(worst, e);
            }
            row.err_theta_max = worst;
            const RealizedErrors re = realize_and_align(truth, est.gamma_lp, true_gamma_lp, p, f);
            row.err_gammalp = re.gammalp;
            row.err_A = re.a;
            row.err_B = re.b;
            row.err_C = re.c;
            row.err_K = re.k;
            row.sigma_gap = re.gap;
            row.status = re.status;
            parsim_ok = true;
        } catch (const PersistenceOfExcitationError&) {
            row.status = "pe_failed";
        }
    }

    if (cfg.estimator != EstimatorChoice::parsim) {
        RealizedErrors re;
        try {
            const Matrix est = estimate_classical_projection(h);
            re = realize_and_align(truth, est, true_gamma_lp, p, f);
        } catch (const PersistenceOfExcitationError&) {
            re.status = "pe_failed";
        }
        if (cfg.estimator == EstimatorChoice::classical) {
            row.err_gammalp = re.gammalp;
            row.err_A = re.a;
            row.err_B = re.b;
            row.err_C = re.c;
            row.err_K = re.k;
            row.sigma_gap = re.gap;
            row.status = re.status;
        } else {
            row.cl_err_gammalp = re.gammalp;
            row.cl_err_A = re.a;
            row.cl_err_B = re.b;
            row.cl_err_C = re.c;
            row.cl_err_K = re.k;
            row.cl_status = re.status;
        }
    }

    if (cfg.bounds && parsim_ok) {
        try {
            const auto reports = bank_bound_reports(truth, p, f, n, cfg.delta, cfg.c, cfg.c0, false);
            row.covered = row_covered(row, reports) ? 1 : 0;
        } catch (const NumericalCovarianceError&) {
            row.covered = -1;
        }
    }
    return row;
}

// ---- statistics ----

Quantiles quantiles(std::vector<double> values) {
    values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return std::isnan(v); }), values.end());
    Quantiles q{kNaN, kNaN, kNaN};
    if (values.empty()) return q;
    std::sort(values.begin(), values.end());
    auto at = [&](double prob) {
        const double pos = prob * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        const double w = pos - static_cast<double>(lo);
        return values[lo] + w * (values[hi] - values[lo]);
    };
    q.q10 = at(0.1);
    q.median = at(0.5);
    q.q90 = at(0.9);
    return q;
}

LogLogFit fit_loglog_slope(std::span<const std::pair<double, double>> points) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& [n, err] : points) {
        if (!(n > 0.0)) throw FitError("fit_loglog_slope: N must be positive");
        if (!(err > 0.0)) throw FitError("fit_loglog_slope: nonpositive error at N = " + format_double(n));
        xs.push_back(std::log(n));
        ys.push_back(std::log(err));
    }
    std::vector<double> distinct = xs;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2) throw FitError("fit_loglog_slope: need at least two distinct N");

    const auto m = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        mx += xs[k];
        my += ys[k];
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxx += (xs[k] - mx) * (xs[k] - mx);
        sxy += (xs[k] - mx) * (ys[k] - my);
    }
    LogLogFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double r = ys[k] - (fit.intercept + fit.slope * xs[k]);
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / m);
    return fit;
}

std::vector<CoverageEntry> coverage_check(std::span<const SweepRow> rows,
                                          std::span<const std::vector<BoundReport>> reports) {
    if (rows.size() != reports.size()) throw ArgumentError("coverage_check: rows and reports are not aligned");
    std::vector<CoverageEntry> out;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const SweepRow& row = rows[k];
        for (const auto& rep : reports[k]) {
            if (rep.n != row.n) throw ArgumentError("coverage_check: report N does not match row N");
        }
        if (!row.ok()) continue;
        if (out.empty() || out.back().n != row.n) {
            CoverageEntry e;
            e.n = row.n;
            e.nominal = reports[k].empty() ? kNaN : 1.0 - 2.0 * reports[k].front().delta;
            out.push_back(e);
        }
        CoverageEntry& e = out.back();
        const double prev = e.fraction * e.trials;
        e.trials += 1;
        e.fraction = (prev + (row_covered(row, reports[k]) ? 1.0 : 0.0)) / e.trials;
    }
    return out;
}

// ---- sweeps ----

const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names = {"err_theta_max", "err_gammalp", "err_A",     "err_B",
                                                   "err_C",         "err_K",       "pe_margin", "sigma_gap"};
    return names;
}

std::vector<SweepRow> collect_rows(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<std::pair<long long, int>> jobs;
    for (long long n : cfg.n_grid)
        for (int t = 0; t < cfg.trials; ++t) jobs.emplace_back(n, t);
    std::vector<SweepRow> rows(jobs.size());
    parallel_for(jobs.size(), cfg.threads, [&](std::size_t k) { rows[k] = run_trial(cfg, jobs[k].first, jobs[k].second); });
    return rows;
}

SweepResult aggregate(const ExperimentConfig& cfg, std::vector<SweepRow> rows) {
    SweepResult res;
    res.nominal_coverage = 1.0 - 2.0 * cfg.delta;
    for (long long n : cfg.n_grid) {
        SweepSummaryEntry e;
        e.n = n;
        std::vector<const SweepRow*> ok_rows;
        int covered = 0, with_bound = 0;
        std::vector<double> ratios;
        for (const auto& row : rows) {
            if (row.n != n) continue;
            e.trials += 1;
            e.p = row.p;
            if (!row.ok()) {
                e.failures[row.status] += 1;
                continue;
            }
            ok_rows.push_back(&row);
            if (row.covered >= 0) {
                ++with_bound;
                covered += row.covered;
            }
            if (std::isfinite(row.cl_err_gammalp) && row.err_gammalp > 0.0)
                ratios.push_back(row.cl_err_gammalp / row.err_gammalp);
        }
        e.succeeded = static_cast<int>(ok_rows.size());
        if (e.trials > 0 && e.succeeded == 0) {
            std::string why;
            for (const auto& [status, count] : e.failures) why += " " + status + "=" + std::to_string(count);
            throw SweepError("every trial failed at N = " + std::to_string(n) + ":" + why);
        }
        for (const auto& name : metric_names()) {
            std::vector<double> vals;
            for (const SweepRow* r : ok_rows) vals.push_back(metric_value(*r, name));
            e.metrics[name] = quantiles(std::move(vals));
        }
        if (with_bound > 0) e.coverage = static_cast<double>(covered) / with_bound;
        if (!ratios.empty()) e.paired_ratio_median = quantiles(ratios).median;
        res.per_n.push_back(std::move(e));
    }
    for (const auto& name : metric_names()) {
        if (name == "pe_margin" || name == "sigma_gap") continue;
        std::vector<std::pair<double, double>> pts;
        for (const auto& e : res.per_n) pts.emplace_back(static_cast<double>(e.n), e.metrics.at(name).median);
        try {
            res.slopes[name] = fit_loglog_slope(pts);
        } catch (const FitError& ex) {
            res.slope_errors[name] = ex.what();
        }
    }
    res.rows = std::move(rows);
    return res;
}

SweepResult run_sweep(const ExperimentConfig& cfg) { return aggregate(cfg, collect_rows(cfg)); }

// ---- output ----

namespace {
const char* kCsvHeader =
    "N,trial,seed,err_theta_max,err_gammalp,err_A,err_B,err_C,err_K,pe_margin,sigma_gap,status,"
    "p,covered,cl_err_gammalp,cl_err_A,cl_err_B,cl_err_C,cl_err_K,cl_status";
}

void write_rows_csv(std::ostream& os, std::span<const SweepRow> rows) {
    os << kCsvHeader << '\n';
    for (const auto& r : rows) {
        os << r.n << ',' << r.trial << ',' << r.seed << ',' << format_double(r.err_theta_max) << ','
           << format_double(r.err_gammalp) << ',' << format_double(r.err_A) << ',' << format_double(r.err_B) << ','
           << format_double(r.err_C) << ',' << format_double(r.err_K) << ',' << format_double(r.pe_margin) << ','
           << format_double(r.sigma_gap) << ',' << r.status << ',' << r.p << ',' << r.covered << ','
           << format_double(r.cl_err_gammalp) << ',' << format_double(r.cl_err_A) << ','
           << format_double(r.cl_err_B) << ',' << format_double(r.cl_err_C) << ',' << format_double(r.cl_err_K)
           << ',' << r.cl_status << '\n';
    }
}

std::vector<SweepRow> read_rows_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kCsvHeader) throw ArgumentError("rows.csv: unexpected header");
    std::vector<SweepRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (cells.size() != 20) throw ArgumentError("rows.csv: malformed row: " + line);
        auto num = [](const std::string& s) { return std::strtod(s.c_str(), nullptr); };
        SweepRow r;
        r.n = std::stoll(cells[0]);
        r.trial = std::stoi(cells[1]);
        r.seed = std::stoull(cells[2]);
        r.err_theta_max = num(cells[3]);
        r.err_gammalp = num(cells[4]);
        r.err_A = num(cells[5]);
        r.err_B = num(cells[6]);
        r.err_C = num(cells[7]);
        r.err_K = num(cells[8]);
        r.pe_margin = num(cells[9]);
        r.sigma_gap = num(cells[10]);
        r.status = cells[11];
        r.p = std::stoll(cells[12]);
        r.covered = std::stoi(cells[13]);
        r.cl_err_gammalp = num(cells[14]);
        r.cl_err_A = num(cells[15]);
        r.cl_err_B = num(cells[16]);
        r.cl_err_C = num(cells[17]);
        r.cl_err_K = num(cells[18]);
        r.cl_status = cells[19];
        rows.push_back(std::move(r));
    }
    return rows;
}

Json summary_to_json(const ExperimentConfig& cfg, const SweepResult& result) {
    Json j;
    j["config"] = config_to_json(cfg);
    j["nominal_coverage"] = result.nominal_coverage;
    Json per = Json::array();
    for (const auto& e : result.per_n) {
        Json je;
        je["N"] = e.n;
        je["p"] = e.p;
        je["trials"] = e.trials;
        je["succeeded"] = e.succeeded;
        je["failures"] = e.failures;
        Json metrics;
        for (const auto& [name, q] : e.metrics) {
            metrics[name] = {{"q10", number_or_null(q.q10)},
                             {"median", number_or_null(q.median)},
                             {"q90", number_or_null(q.q90)}};
        }
        je["metrics"] = metrics;
        je["coverage"] = e.coverage ? Json(*e.coverage) : Json(nullptr);
        je["paired_ratio_median"] = e.paired_ratio_median ? Json(*e.paired_ratio_median) : Json(nullptr);
        per.push_back(std::move(je));
    }
    j["per_N"] = per;
    Json slopes = Json::object();
    for (const auto& [name, fit] : result.slopes) {
        slopes[name] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"residual", fit.residual}};
    }
    for (const auto& [name, why] : result.slope_errors) slopes[name] = {{"error", why}};
    j["slopes"] = slopes;
    return j;
}

void write_sweep_outputs(const ExperimentConfig& cfg, const SweepResult& result) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    {
        std::ofstream out(fs::path(cfg.output_dir) / "config.json");
        out << config_to_json(cfg).dump(2) << '\n';
    }
    {
        std::ofstream out(fs::path(cfg.output_dir) / "rows.csv");
        write_rows_csv(out, result.rows);
    }
    {
        std::ofstream out(fs::path(cfg.output_dir) / "summary.json");
        out << summary_to_json(cfg, result).dump(2) << '\n';
    }
}

}  // namespace parsim
