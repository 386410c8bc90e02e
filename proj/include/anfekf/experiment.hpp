#pragma once

// Experiment front end shared by the command-line tool and the tests:
// scenario loading, overrides, Monte Carlo execution and CSV output.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "anfekf/metrics.hpp"
#include "anfekf/scenario_io.hpp"
#include "anfekf/simulator.hpp"

namespace anfekf {

inline constexpr int kCsvSchemaVersion = 1;

struct ExperimentOverrides {
    std::optional<std::size_t> window;
    std::optional<double> eta;
    std::optional<double> r_floor;
    std::optional<double> q_floor;
};

struct ExperimentSpec {
    std::filesystem::path scenario;
    Variant variant = Variant::Ekf;
    int n_runs = 50;
    std::optional<std::uint64_t> base_seed;  // defaults to the scenario seed
    std::filesystem::path out_dir = ".";
    ExperimentOverrides overrides;
    int threads = 0;

    /// Throws ConfigError for out-of-range overrides (eta in (0, 1], window >= 2).
    void validate() const;
};

/// Layers the command-line overrides on top of the scenario file's filter block.
FilterSettings apply_overrides(FilterSettings base, const ExperimentOverrides& overrides);

void write_runs_csv(std::ostream& out, const std::vector<RunLog>& logs);
void write_report_csv(std::ostream& out, const EnsembleReport& report);
void write_summary_csv(std::ostream& out, const EnsembleReport& report);
void write_compare_csv(std::ostream& out, const EnsembleReport& a, const EnsembleReport& b);
void write_compare_summary_csv(std::ostream& out, Variant va, const EnsembleReport& a, Variant vb,
                               const EnsembleReport& b);

/// Column documentation printed by --help.
std::string csv_column_help();

/// Writes runs.csv, report.csv, summary.csv and metadata.json into out_dir.
/// Returns 0 on success, nonzero with a message on err otherwise.
int cmd_run(const ExperimentSpec& spec, std::ostream& err);

/// Runs both specs on the seeds of spec_a and writes compare.csv and
/// compare_summary.csv (deltas are b - a) into spec_a.out_dir.
int cmd_compare(const ExperimentSpec& spec_a, const ExperimentSpec& spec_b, std::ostream& err);

/// Writes the built-in scenario (optionally with a preset's assumed noise).
int cmd_scenario_default(const std::filesystem::path& out, Preset preset, std::ostream& err);

}  // namespace anfekf
