#pragma once

#include "parsim/bounds.hpp"
#include "parsim/json.hpp"
#include "parsim/system_model.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace parsim {

enum class EstimatorChoice { parsim, classical, both };

/// Experiment description. JSON form (see docs/config.md):
///
///   { "model": "S1" | {A, B, C, K, sigma_e, sigma_u},
///     "noiseless": false, "f": 5,
///     "p_rule": 2 | "assumption2", "beta_grid": [0.5, 1, 2],
///     "N_grid": [250, 500], "trials": 50, "delta": 0.05,
///     "base_seed": 1, "c": 1, "c0": 1, "estimator": "parsim",
///     "output_dir": "out", "threads": 0, "bounds": true }
struct ExperimentConfig {
    StateSpaceModel model;
    std::string model_name = "inline";
    bool noiseless = false;
    Index f = 0;
    std::optional<Index> p_fixed;  // empty => logarithmic rule over beta_grid
    std::vector<double> beta_grid;
    std::vector<long long> n_grid;
    int trials = 1;
    double delta = 0.05;
    std::uint64_t base_seed = 0;
    double c = 1.0;
    double c0 = 1.0;
    EstimatorChoice estimator = EstimatorChoice::parsim;
    std::string output_dir = "sweep_out";
    unsigned threads = 0;
    bool bounds = true;

    /// Throws ConfigError on any violated invariant (grid ordering, trials,
    /// delta range, horizons, model stability and minimality).
    void validate() const;
};

ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

/// Named fixtures accepted in place of an inline model ("S1").
StateSpaceModel fixture_by_name(const std::string& name);

/// base_seed XOR hash64(N, trial).
std::uint64_t trial_seed(std::uint64_t base_seed, long long n, int trial);

/// Past horizon used at sample size N under the configured rule.
Index past_horizon_for(const ExperimentConfig& cfg, long long n);

struct SweepRow {
    long long n = 0;
    int trial = 0;
    std::uint64_t seed = 0;
    Index p = 0;
    double err_theta_max = 0.0;
    double err_gammalp = 0.0;
    double err_A = 0.0;
    double err_B = 0.0;
    double err_C = 0.0;
    double err_K = 0.0;
    double pe_margin = 0.0;
    double sigma_gap = 0.0;
    std::string status = "ok";
    int covered = -1;  // 1/0, -1 when no bound is available
    // Paired projection-estimator errors (estimator == both).
    double cl_err_gammalp = 0.0;
    double cl_err_A = 0.0;
    double cl_err_B = 0.0;
    double cl_err_C = 0.0;
    double cl_err_K = 0.0;
    std::string cl_status;
    /// ||theta_i^ - theta_i|| per row (in memory only).
    std::vector<double> theta_errors;

    bool ok() const { return status == "ok"; }
};

/// One Monte Carlo trial: simulate, estimate, realize, align, measure.
/// Estimation/realization failures are recorded in `status`, not thrown.
SweepRow run_trial(const ExperimentConfig& cfg, long long n, int trial);

struct Quantiles {
    double q10 = 0.0;
    double median = 0.0;
    double q90 = 0.0;
};

/// Linear-interpolation quantiles; NaN entries are skipped.
Quantiles quantiles(std::vector<double> values);

struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // RMS residual in log space
};

/// Least-squares line through (ln N, ln error). Throws FitError with fewer
/// than two distinct N or any nonpositive error.
LogLogFit fit_loglog_slope(std::span<const std::pair<double, double>> points);

struct CoverageEntry {
    long long n = 0;
    int trials = 0;
    double fraction = 0.0;
    double nominal = 0.0;  // 1 - 2 delta
};

/// Fraction of trials per N where every row satisfies
/// ||theta_i^ - theta_i||^2 <= theta_radius2_i. `reports[k]` belongs to
/// `rows[k]`; mismatched lengths or N values throw ArgumentError. Rows that
/// are not ok are skipped.
std::vector<CoverageEntry> coverage_check(std::span<const SweepRow> rows,
                                          std::span<const std::vector<BoundReport>> reports);

struct SweepSummaryEntry {
    long long n = 0;
    Index p = 0;
    int trials = 0;
    int succeeded = 0;
    std::map<std::string, int> failures;
    std::map<std::string, Quantiles> metrics;
    std::optional<double> coverage;
    std::optional<double> paired_ratio_median;  // classical / PARSIM err_gammalp
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<SweepSummaryEntry> per_n;
    std::map<std::string, LogLogFit> slopes;
    std::map<std::string, std::string> slope_errors;
    double nominal_coverage = 0.0;
};

/// Runs every (N, trial) on cfg.threads workers; rows are ordered by
/// (N, trial) regardless of scheduling.
std::vector<SweepRow> collect_rows(const ExperimentConfig& cfg);

/// Quantiles, slopes and coverage from rows. Throws SweepError naming the
/// first N at which every trial failed.
SweepResult aggregate(const ExperimentConfig& cfg, std::vector<SweepRow> rows);

SweepResult run_sweep(const ExperimentConfig& cfg);

/// Metrics that receive quantiles and a slope fit.
const std::vector<std::string>& metric_names();

void write_rows_csv(std::ostream& os, std::span<const SweepRow> rows);
std::vector<SweepRow> read_rows_csv(std::istream& is);
Json summary_to_json(const ExperimentConfig& cfg, const SweepResult& result);

/// Writes config.json, rows.csv and summary.json into cfg.output_dir.
void write_sweep_outputs(const ExperimentConfig& cfg, const SweepResult& result);

}  // namespace parsim
