#include "anfekf/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>

#include "anfekf/errors.hpp"

namespace anfekf {

namespace fs = std::filesystem;

namespace {

// Shortest representation that round-trips, so identical runs give
// byte-identical files.
std::string num(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string header(const char* name) {
    return "# anfekf " + std::string(name) + " schema " + std::to_string(kCsvSchemaVersion) + "\n";
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> run_rmses(const EnsembleReport& r) {
    std::vector<double> out;
    for (const RunMetrics& m : r.runs) out.push_back(m.rmse_pos);
    return out;
}

struct Loaded {
    ScenarioFile file;
    FilterSettings filter;
    std::uint64_t seed;
};

Loaded load(const ExperimentSpec& spec) {
    spec.validate();
    Loaded l{load_scenario(spec.scenario), {}, 0};
    l.filter = apply_overrides(l.file.filter, spec.overrides);
    l.seed = spec.base_seed.value_or(l.file.scenario.seed);
    return l;
}

std::vector<RunLog> execute(const Loaded& l, const ExperimentSpec& spec, std::uint64_t seed) {
    MonteCarloOptions opts;
    opts.threads = spec.threads;
    opts.filter = l.filter;
    return run_monte_carlo(l.file.scenario, spec.variant, spec.n_runs, seed, opts);
}

std::string timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

void prepare_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("output directory " + dir.string() + " is not writable");
}

}  // namespace

void ExperimentSpec::validate() const {
    if (n_runs < 1) throw ConfigError("--runs must be >= 1");
    if (threads < 0) throw ConfigError("--threads must be >= 0");
    if (overrides.window && *overrides.window < 2) throw ConfigError("--window must be >= 2");
    if (overrides.eta && !(*overrides.eta > 0.0 && *overrides.eta <= 1.0))
        throw ConfigError("--eta must lie in (0, 1]");
    if (overrides.r_floor && !(*overrides.r_floor > 0.0)) throw ConfigError("--r-floor must be positive");
    if (overrides.q_floor && !(*overrides.q_floor > 0.0)) throw ConfigError("--q-floor must be positive");
}

FilterSettings apply_overrides(FilterSettings base, const ExperimentOverrides& o) {
    if (o.window) base.adaptation.window = *o.window;
    if (o.eta) {
        base.adaptation.eta = *o.eta;
        if (base.r_nets)
            for (AnfisNet& n : *base.r_nets) n.set_learning_rate(*o.eta);
        if (base.q_net) base.q_net->set_learning_rate(*o.eta);
    }
    if (o.r_floor) base.adaptation.r_floor = *o.r_floor;
    if (o.q_floor) base.adaptation.q_floor = *o.q_floor;
    base.adaptation.validate();
    return base;
}

void write_runs_csv(std::ostream& out, const std::vector<RunLog>& logs) {
    out << header("runs.csv");
    out << "run,step,t,truth_x,truth_y,truth_phi,est_x,est_y,est_phi,P11,P22,P33,nees,n_meas,n_gated,"
           "R11,R22,Q11,Q22,dom11,dom22\n";
    for (const RunLog& log : logs) {
        const std::vector<double> eps = nees_series(log);
        for (std::size_t k = 0; k < log.steps.size(); ++k) {
            const StepRecord& s = log.steps[k];
            const auto& m = s.estimate.mean;
            const auto& P = s.estimate.P;
            out << log.summary.run << ',' << s.step << ',' << num(s.t) << ',' << num(s.truth.x) << ','
                << num(s.truth.y) << ',' << num(s.truth.phi) << ',' << num(m(0)) << ',' << num(m(1)) << ','
                << num(m(2)) << ',' << num(P(0, 0)) << ',' << num(P(1, 1)) << ',' << num(P(2, 2)) << ','
                << num(eps[k]) << ',' << s.n_meas << ',' << s.n_gated << ',' << num(s.R_diag(0)) << ','
                << num(s.R_diag(1)) << ',' << num(s.Q_diag(0)) << ',' << num(s.Q_diag(1)) << ',';
            if (s.adaptation.evaluated)
                out << num(s.adaptation.dom_diag(0)) << ',' << num(s.adaptation.dom_diag(1));
            else
                out << ',';
            out << '\n';
        }
    }
}

void write_report_csv(std::ostream& out, const EnsembleReport& r) {
    out << header("report.csv");
    out << "step,t,rmse_pos,avg_nees,band_lo,band_hi\n";
    for (std::size_t k = 0; k < r.t.size(); ++k)
        out << k + 1 << ',' << num(r.t[k]) << ',' << num(r.rmse_pos[k]) << ',' << num(r.avg_nees[k]) << ','
            << num(r.band.lower) << ',' << num(r.band.upper) << '\n';
}

void write_summary_csv(std::ostream& out, const EnsembleReport& r) {
    out << header("summary.csv");
    out << "run,seed,rmse_pos,rmse_heading,mean_nees,timeout\n";
    for (const RunMetrics& m : r.runs)
        out << m.run << ',' << m.seed << ',' << num(m.rmse_pos) << ',' << num(m.rmse_heading) << ','
            << num(m.mean_nees) << ',' << (m.timeout ? 1 : 0) << '\n';
}

void write_compare_csv(std::ostream& out, const EnsembleReport& a, const EnsembleReport& b) {
    if (a.t.size() != b.t.size()) throw ConfigError("compared experiments have different lengths");
    out << header("compare.csv");
    out << "step,t,rmse_pos_a,rmse_pos_b,d_rmse_pos,avg_nees_a,avg_nees_b,d_avg_nees,band_lo,band_hi\n";
    for (std::size_t k = 0; k < a.t.size(); ++k)
        out << k + 1 << ',' << num(a.t[k]) << ',' << num(a.rmse_pos[k]) << ',' << num(b.rmse_pos[k]) << ','
            << num(b.rmse_pos[k] - a.rmse_pos[k]) << ',' << num(a.avg_nees[k]) << ',' << num(b.avg_nees[k])
            << ',' << num(b.avg_nees[k] - a.avg_nees[k]) << ',' << num(a.band.lower) << ','
            << num(a.band.upper) << '\n';
}

void write_compare_summary_csv(std::ostream& out, Variant va, const EnsembleReport& a, Variant vb,
                               const EnsembleReport& b) {
    out << header("compare_summary.csv");
    out << "# a=" << to_string(va) << " b=" << to_string(vb) << "\n";
    out << "metric,a,b,delta\n";
    auto row = [&out](const char* name, double x, double y) {
        out << name << ',' << num(x) << ',' << num(y) << ',' << num(y - x) << '\n';
    };
    row("mean_rmse_pos", a.mean_rmse_pos, b.mean_rmse_pos);
    row("median_run_rmse_pos", median(run_rmses(a)), median(run_rmses(b)));
    row("in_band_fraction", a.in_band_fraction, b.in_band_fraction);
    row("mean_avg_nees", time_average(a.avg_nees), time_average(b.avg_nees));
    // Fraction of paired runs each side wins outright; ties count for neither.
    std::size_t a_wins = 0, b_wins = 0;
    const std::size_t n = std::min(a.runs.size(), b.runs.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (b.runs[i].rmse_pos < a.runs[i].rmse_pos) ++b_wins;
        if (a.runs[i].rmse_pos < b.runs[i].rmse_pos) ++a_wins;
    }
    const double dn = n ? static_cast<double>(n) : 1.0;
    row("paired_win_fraction", static_cast<double>(a_wins) / dn, static_cast<double>(b_wins) / dn);
}

std::string csv_column_help() {
    return R"(Output files (first line of every CSV is "# anfekf <file> schema 1"; angles in rad):
  runs.csv     one row per run and control step
    run        run index (seed = base seed + run)
    step       control step, 1-based; t = step / control_rate
    t          time, s
    truth_x, truth_y, truth_phi     true pose (m, m, rad)
    est_x, est_y, est_phi           filter estimate (m, m, rad)
    P11, P22, P33                   diagonal of the estimate covariance
    nees       normalized estimation error squared of the estimate
    n_meas     measurements received this step (0 between scans)
    n_gated    measurements rejected by the gate this step
    R11, R22   current measurement noise variances (m^2, rad^2)
    Q11, Q22   current control noise variances ((m/s)^2, rad^2)
    dom11, dom22  degree of mismatch S - C on scans where it was evaluated, else empty
  report.csv   one row per control step, ensemble over runs
    step, t    as above
    rmse_pos   sqrt(mean over runs of squared position error), m
    avg_nees   mean NEES over runs
    band_lo, band_hi  two-sided 95% chi-square band for avg_nees
  summary.csv  one row per run
    run, seed, rmse_pos (time-averaged), rmse_heading (rad), mean_nees, timeout (route not completed)
  compare.csv  per step: rmse_pos_a, rmse_pos_b, d_rmse_pos (b - a), avg_nees_a, avg_nees_b,
               d_avg_nees (b - a), band_lo, band_hi
  compare_summary.csv  metric, a, b, delta (b - a) for mean_rmse_pos, median_run_rmse_pos,
               in_band_fraction, mean_avg_nees, paired_win_fraction (runs with strictly lower rmse_pos)
  metadata.json  command, variant, seeds and wall-clock timestamp (not deterministic)
)";
}

int cmd_run(const ExperimentSpec& spec, std::ostream& err) {
    try {
        const Loaded l = load(spec);
        prepare_dir(spec.out_dir);
        const std::vector<RunLog> logs = execute(l, spec, l.seed);
        const EnsembleReport report = make_report(logs);
        {
            auto out = open_out(spec.out_dir / "runs.csv");
            write_runs_csv(out, logs);
        }
        {
            auto out = open_out(spec.out_dir / "report.csv");
            write_report_csv(out, report);
        }
        {
            auto out = open_out(spec.out_dir / "summary.csv");
            write_summary_csv(out, report);
        }
        nlohmann::json meta = {{"command", "run"},
                               {"scenario", spec.scenario.string()},
                               {"variant", to_string(spec.variant)},
                               {"runs", spec.n_runs},
                               {"base_seed", l.seed},
                               {"mean_rmse_pos", report.mean_rmse_pos},
                               {"in_band_fraction", report.in_band_fraction},
                               {"created", timestamp()}};
        auto out = open_out(spec.out_dir / "metadata.json");
        out << meta.dump(2) << '\n';
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

int cmd_compare(const ExperimentSpec& spec_a, const ExperimentSpec& spec_b, std::ostream& err) {
    try {
        const Loaded la = load(spec_a);
        const Loaded lb = load(spec_b);
        prepare_dir(spec_a.out_dir);
        if (spec_a.n_runs != spec_b.n_runs) throw ConfigError("compared experiments need equal --runs");
        const EnsembleReport ra = make_report(execute(la, spec_a, la.seed));
        const EnsembleReport rb = make_report(execute(lb, spec_b, la.seed));
        {
            auto out = open_out(spec_a.out_dir / "compare.csv");
            write_compare_csv(out, ra, rb);
        }
        {
            auto out = open_out(spec_a.out_dir / "compare_summary.csv");
            write_compare_summary_csv(out, spec_a.variant, ra, spec_b.variant, rb);
        }
        nlohmann::json meta = {{"command", "compare"},
                               {"scenario_a", spec_a.scenario.string()},
                               {"scenario_b", spec_b.scenario.string()},
                               {"variant_a", to_string(spec_a.variant)},
                               {"variant_b", to_string(spec_b.variant)},
                               {"runs", spec_a.n_runs},
                               {"base_seed", la.seed},
                               {"created", timestamp()}};
        auto out = open_out(spec_a.out_dir / "metadata.json");
        out << meta.dump(2) << '\n';
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

int cmd_scenario_default(const fs::path& out, Preset preset, std::ostream& err) {
    try {
        ScenarioFile file{preset_scenario(preset), {}};
        if (out.has_parent_path()) prepare_dir(out.parent_path());
        save_scenario(file, out);
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace anfekf
