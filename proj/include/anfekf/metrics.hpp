#pragma once

// Monte Carlo consistency and accuracy metrics.

#include <utility>
#include <vector>

#include "anfekf/ekf.hpp"
#include "anfekf/simulator.hpp"

namespace anfekf {

/// e^T P^-1 e with e = truth - estimate, heading component wrapped.
double nees(const Pose& truth, const GaussianState& est);

std::vector<double> nees_series(const RunLog& log);

/// Pointwise mean of the NEES series across runs. All runs must have equal length.
std::vector<double> average_nees(const std::vector<RunLog>& logs);

/// Per timestep sqrt(mean over runs of (dx^2 + dy^2)).
std::vector<double> rmse(const std::vector<RunLog>& logs);

/// Per timestep sqrt(mean over runs of wrapped heading error^2), rad.
std::vector<double> heading_rmse(const std::vector<RunLog>& logs);

/// sqrt(mean over time of dx^2 + dy^2) for one run.
double run_position_rmse(const RunLog& log);

double time_average(const std::vector<double>& series);

/// Regularized lower incomplete gamma function P(a, x).
double regularized_gamma_p(double a, double x);

/// Inverse CDF of the chi-square distribution with dof degrees of freedom.
double chi2_quantile(double p, double dof);

struct Chi2Band {
    double lower = 0.0;
    double upper = 0.0;
};

/// Two-sided band for the average NEES of n_runs runs of a state_dim state:
/// [chi2_q(N d) / N, chi2_{1-q}(N d) / N] with q = (1 - confidence) / 2.
Chi2Band chi2_band(int n_runs, int state_dim, double confidence);

double in_band_fraction(const std::vector<double>& series, const Chi2Band& band);

struct RunMetrics {
    long run = 0;
    std::uint64_t seed = 0;
    double rmse_pos = 0.0;
    double rmse_heading = 0.0;
    double mean_nees = 0.0;
    bool timeout = false;
};

struct EnsembleReport {
    std::vector<double> t;
    std::vector<double> rmse_pos;
    std::vector<double> rmse_heading;
    std::vector<double> avg_nees;
    Chi2Band band;
    double in_band_fraction = 0.0;
    double mean_rmse_pos = 0.0;  // time average of rmse_pos
    std::vector<RunMetrics> runs;
};

EnsembleReport make_report(const std::vector<RunLog>& logs, double confidence = 0.95);

}  // namespace anfekf
