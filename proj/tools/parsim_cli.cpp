// Command-line driver for the PARSIM identification library.
//
// Exit codes: 0 success, 2 persistence-of-excitation / sweep failure,
// 3 invalid configuration or model, 1 anything else.

#include "parsim/bounds.hpp"
#include "parsim/data_assembly.hpp"
#include "parsim/estimators.hpp"
#include "parsim/harness.hpp"
#include "parsim/json.hpp"
#include "parsim/linalg.hpp"
#include "parsim/realization.hpp"
#include "parsim/system_model.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace parsim;

constexpr int kExitFailure = 2;
constexpr int kExitConfig = 3;

StateSpaceModel model_from_arg(const std::string& arg) {
    if (std::filesystem::exists(arg)) return load_model(arg);
    return fixture_by_name(arg);
}

Json alignment_json(const AlignmentResult& a) {
    return {{"T", matrix_to_json(a.T)},       {"condition", a.condition}, {"err_A", a.err_A},
            {"err_B", a.err_B},               {"err_C", a.err_C},         {"err_K", a.err_K},
            {"err_gamma", a.err_gamma},       {"err_lp", a.err_lp}};
}

int cmd_validate(const std::string& path, bool noiseless) {
    const StateSpaceModel m = model_from_arg(path);
    const ValidationReport rep = validate_model(m, {noiseless});
    Json j{{"passed", rep.passed},
           {"rho_A", rep.rho_a},
           {"rho_A_minus_KC", rep.rho_closed_loop},
           {"observability_rank", rep.observability_rank},
           {"controllability_rank", rep.controllability_rank},
           {"nx", m.nx()},
           {"diagnostics", rep.diagnostics}};
    std::cout << j.dump(2) << '\n';
    return rep.passed ? 0 : kExitConfig;
}

int cmd_simulate(const std::string& model_arg, long long length, std::uint64_t seed, bool noiseless,
                 const std::string& out) {
    const StateSpaceModel m = model_from_arg(model_arg);
    const Trajectory t = simulate(m, static_cast<Index>(length), seed, noiseless);
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!out.empty()) {
        file.open(out);
        if (!file) throw ArgumentError("cannot open " + out);
        os = &file;
    }
    *os << "k";
    for (Index r = 0; r < m.nu(); ++r) *os << ",u" << r + 1;
    for (Index r = 0; r < m.ny(); ++r) *os << ",y" << r + 1;
    for (Index r = 0; r < m.nx(); ++r) *os << ",x" << r + 1;
    for (Index r = 0; r < m.ny(); ++r) *os << ",e" << r + 1;
    *os << '\n';
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        *os << ',' << buf;
    };
    for (Index k = 0; k < t.length(); ++k) {
        *os << k + 1;
        for (Index r = 0; r < m.nu(); ++r) put(t.u(r, k));
        for (Index r = 0; r < m.ny(); ++r) put(t.y(r, k));
        for (Index r = 0; r < m.nx(); ++r) put(t.x(r, k));
        for (Index r = 0; r < m.ny(); ++r) put(t.e(r, k));
        *os << '\n';
    }
    return 0;
}

struct IdentifyArgs {
    std::string model;
    long long p = 2;
    long long f = 3;
    long long n = 1000;
    std::uint64_t seed = 1;
    bool noiseless = false;
    std::string estimator = "parsim";
    std::string out;
    std::string theta_csv_dir;
};

int cmd_identify(const IdentifyArgs& a) {
    StateSpaceModel truth = model_from_arg(a.model);
    if (a.noiseless) truth.sigma_e = 0.0;
    const Index p = a.p, f = a.f;
    const Trajectory t = simulate(truth, p + f + a.n - 1, a.seed, a.noiseless);
    const HankelBundle h = build_hankels(t, p, f, a.n);

    Json j;
    Matrix est;
    if (a.estimator == "classical") {
        est = estimate_classical_projection(h);
    } else {
        const RegressorBank bank = build_regressor_bank(h);
        const ArxBankEstimate bank_est = estimate_parsim_bank(bank, 0);
        est = bank_est.gamma_lp;
        Json markov = Json::array();
        for (const auto& me : bank_est.markov) markov.push_back({{"lag", me.lag}, {"mean", matrix_to_json(me.mean)}});
        j["markov"] = markov;
        j["gram_min_eig"] = bank_est.gram_min_eig;
        if (!a.theta_csv_dir.empty()) {
            std::filesystem::create_directories(a.theta_csv_dir);
            for (Index i = 1; i <= f; ++i)
                linalg::write_csv(a.theta_csv_dir + "/theta_" + std::to_string(i) + ".csv", bank_est.row(i));
        }
    }
    RealizationResult r = realize(est, p, f, truth.nx(), truth.nu(), truth.ny());
    const AlignmentResult al = align_similarity(truth, f, r);
    j["gamma_lp"] = matrix_to_json(est);
    j["singular_values"] = std::vector<double>(r.singular_values.data(), r.singular_values.data() + r.singular_values.size());
    j["sigma_gap"] = r.sigma_gap;
    j["alignment"] = alignment_json(al);
    Json model = model_to_json(realized_model(r, truth));
    model["similarity"] = alignment_json(al);
    model["horizons"] = {{"p", p}, {"f", f}, {"N", a.n}, {"seed", a.seed}, {"estimator", a.estimator}};
    j["model"] = model;
    if (!a.out.empty()) {
        std::ofstream out(a.out);
        out << model.dump(2) << '\n';
    }
    std::cout << j.dump(2) << '\n';
    return 0;
}

struct BoundsArgs {
    std::string model;
    long long p = 2;
    long long f = 3;
    long long n = 1000;
    double delta = 0.05;
    double c = 1.0;
    double c0 = 1.0;
    bool burn_in = true;
};

int cmd_bounds(const BoundsArgs& a) {
    const StateSpaceModel m = model_from_arg(a.model);
    const auto reports = bank_bound_reports(m, a.p, a.f, a.n, a.delta, a.c, a.c0, a.burn_in);
    Json arr = Json::array();
    for (const auto& r : reports) arr.push_back(to_json(r));
    std::cout << Json{{"reports", arr}}.dump(2) << '\n';
    return 0;
}

void print_summary(const SweepResult& res) {
    std::printf("%8s %4s %6s %14s %14s %14s %14s %9s\n", "N", "p", "ok", "med_theta", "med_gammalp", "med_A",
                "med_C", "coverage");
    for (const auto& e : res.per_n) {
        std::printf("%8lld %4lld %3d/%-3d %14.6g %14.6g %14.6g %14.6g %9s\n", e.n, static_cast<long long>(e.p),
                    e.succeeded, e.trials, e.metrics.at("err_theta_max").median, e.metrics.at("err_gammalp").median,
                    e.metrics.at("err_A").median, e.metrics.at("err_C").median,
                    e.coverage ? std::to_string(*e.coverage).c_str() : "-");
    }
    for (const auto& [name, fit] : res.slopes) std::printf("slope %-14s % .4f\n", name.c_str(), fit.slope);
}

int cmd_sweep(const std::string& config_path, const std::string& out_override, long long threads) {
    ExperimentConfig cfg = load_config(config_path);
    if (!out_override.empty()) cfg.output_dir = out_override;
    if (threads >= 0) cfg.threads = static_cast<unsigned>(threads);
    std::vector<SweepRow> rows = collect_rows(cfg);
    SweepResult res;
    try {
        res = aggregate(cfg, rows);
    } catch (const SweepError& ex) {
        res.rows = std::move(rows);
        std::filesystem::create_directories(cfg.output_dir);
        std::ofstream out(std::filesystem::path(cfg.output_dir) / "rows.csv");
        write_rows_csv(out, res.rows);
        throw;
    }
    write_sweep_outputs(cfg, res);
    print_summary(res);
    return 0;
}

int cmd_report(const std::string& dir) {
    namespace fs = std::filesystem;
    const ExperimentConfig cfg = load_config((fs::path(dir) / "config.json").string());
    std::ifstream in(fs::path(dir) / "rows.csv");
    if (!in) throw ArgumentError("cannot open rows.csv in " + dir);
    SweepResult res = aggregate(cfg, read_rows_csv(in));
    std::ofstream out(fs::path(dir) / "summary.json");
    out << summary_to_json(cfg, res).dump(2) << '\n';
    print_summary(res);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PARSIM subspace identification and finite-sample experiment harness"};
    app.require_subcommand(1);

    std::string validate_path;
    bool validate_noiseless = false;
    auto* validate = app.add_subcommand("validate", "Check a model JSON file against the stability/minimality assumptions");
    validate->add_option("model", validate_path, "Model JSON file or fixture name (S1)")->required();
    validate->add_flag("--noiseless", validate_noiseless, "Allow sigma_e = 0");

    std::string sim_model;
    long long sim_length = 100;
    std::uint64_t sim_seed = 1;
    bool sim_noiseless = false;
    std::string sim_out;
    auto* sim = app.add_subcommand("simulate", "Simulate a trajectory and write it as CSV");
    sim->add_option("--model", sim_model, "Model JSON file or fixture name")->required();
    sim->add_option("--length", sim_length, "Number of samples")->check(CLI::PositiveNumber);
    sim->add_option("--seed", sim_seed, "Generator seed");
    sim->add_flag("--noiseless", sim_noiseless, "Zero innovations");
    sim->add_option("--out", sim_out, "Output CSV (default stdout)");

    IdentifyArgs id;
    auto* identify = app.add_subcommand("identify", "Simulate, identify and align against the true model");
    identify->add_option("--model", id.model, "Model JSON file or fixture name")->required();
    identify->add_option("-p,--past", id.p, "Past horizon")->check(CLI::PositiveNumber);
    identify->add_option("-f,--future", id.f, "Future horizon")->check(CLI::PositiveNumber);
    identify->add_option("-N,--samples", id.n, "Hankel column count N")->check(CLI::PositiveNumber);
    identify->add_option("--seed", id.seed, "Generator seed");
    identify->add_flag("--noiseless", id.noiseless, "Zero innovations");
    identify->add_option("--estimator", id.estimator, "parsim or classical")
        ->check(CLI::IsMember({"parsim", "classical"}));
    identify->add_option("--out", id.out, "Write the realized model JSON here");
    identify->add_option("--theta-csv", id.theta_csv_dir, "Directory for per-row theta CSV dumps");

    BoundsArgs bd;
    bool no_burn_in = false;
    auto* bounds = app.add_subcommand("bounds", "Evaluate burn-in, SNR and error radii for each ARX row");
    bounds->add_option("--model", bd.model, "Model JSON file or fixture name")->required();
    bounds->add_option("-p,--past", bd.p, "Past horizon")->check(CLI::PositiveNumber);
    bounds->add_option("-f,--future", bd.f, "Future horizon")->check(CLI::PositiveNumber);
    bounds->add_option("-N,--samples", bd.n, "Sample count")->check(CLI::PositiveNumber);
    bounds->add_option("--delta", bd.delta, "Failure probability")->check(CLI::Range(0.0, 1.0));
    bounds->add_option("--c", bd.c, "Universal constant c");
    bounds->add_option("--c0", bd.c0, "Universal constant c0");
    bounds->add_flag("--no-burn-in", no_burn_in, "Skip the burn-in scan");

    std::string sweep_config;
    std::string sweep_out;
    long long sweep_threads = -1;
    auto* sweep = app.add_subcommand("sweep", "Run a Monte Carlo sweep over N");
    sweep->add_option("config", sweep_config, "Experiment config JSON")->required();
    sweep->add_option("--out", sweep_out, "Override output_dir");
    sweep->add_option("--threads", sweep_threads, "Override worker count (0 = all cores)");

    std::string report_dir;
    auto* report = app.add_subcommand("report", "Recompute summary.json from a sweep directory");
    report->add_option("sweep_dir", report_dir, "Directory written by sweep")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*validate) return cmd_validate(validate_path, validate_noiseless);
        if (*sim) return cmd_simulate(sim_model, sim_length, sim_seed, sim_noiseless, sim_out);
        if (*identify) return cmd_identify(id);
        if (*bounds) {
            bd.burn_in = !no_burn_in;
            return cmd_bounds(bd);
        }
        if (*sweep) return cmd_sweep(sweep_config, sweep_out, sweep_threads);
        if (*report) return cmd_report(report_dir);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const PersistenceOfExcitationError& e) {
        std::cerr << "PE failure: " << e.what() << '\n';
        return kExitFailure;
    } catch (const SweepError& e) {
        std::cerr << "sweep failure: " << e.what() << '\n';
        return kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
