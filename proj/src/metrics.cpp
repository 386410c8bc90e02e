#include "anfekf/metrics.hpp"

#include <cmath>
#include <limits>

#include "anfekf/errors.hpp"

namespace anfekf {

namespace {

Vec3 pose_error(const Pose& truth, const GaussianState& est) {
    return {truth.x - est.mean(0), truth.y - est.mean(1), wrap_angle(truth.phi - est.mean(2))};
}

std::size_t common_length(const std::vector<RunLog>& logs) {
    if (logs.empty()) throw ConfigError("metrics need at least one run");
    const std::size_t n = logs.front().steps.size();
    for (const RunLog& log : logs)
        if (log.steps.size() != n) throw ConfigError("runs have different lengths");
    return n;
}

}  // namespace

double nees(const Pose& truth, const GaussianState& est) {
    const Eigen::LDLT<Mat3> ldlt(est.P);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= std::numeric_limits<double>::min())
        throw SingularMatrixError("estimate covariance is not invertible");
    const Vec3 e = pose_error(truth, est);
    return e.dot(ldlt.solve(e));
}

std::vector<double> nees_series(const RunLog& log) {
    std::vector<double> out;
    out.reserve(log.steps.size());
    for (const StepRecord& s : log.steps) out.push_back(nees(s.truth, s.estimate));
    return out;
}

std::vector<double> average_nees(const std::vector<RunLog>& logs) {
    const std::size_t n = common_length(logs);
    std::vector<double> avg(n, 0.0);
    for (const RunLog& log : logs)
        for (std::size_t k = 0; k < n; ++k) avg[k] += nees(log.steps[k].truth, log.steps[k].estimate);
    for (double& v : avg) v /= static_cast<double>(logs.size());
    return avg;
}

std::vector<double> rmse(const std::vector<RunLog>& logs) {
    const std::size_t n = common_length(logs);
    std::vector<double> out(n, 0.0);
    for (const RunLog& log : logs)
        for (std::size_t k = 0; k < n; ++k) {
            const Vec3 e = pose_error(log.steps[k].truth, log.steps[k].estimate);
            out[k] += e(0) * e(0) + e(1) * e(1);
        }
    for (double& v : out) v = std::sqrt(v / static_cast<double>(logs.size()));
    return out;
}

std::vector<double> heading_rmse(const std::vector<RunLog>& logs) {
    const std::size_t n = common_length(logs);
    std::vector<double> out(n, 0.0);
    for (const RunLog& log : logs)
        for (std::size_t k = 0; k < n; ++k) {
            const double e = pose_error(log.steps[k].truth, log.steps[k].estimate)(2);
            out[k] += e * e;
        }
    for (double& v : out) v = std::sqrt(v / static_cast<double>(logs.size()));
    return out;
}

double run_position_rmse(const RunLog& log) {
    if (log.steps.empty()) return 0.0;
    double acc = 0.0;
    for (const StepRecord& s : log.steps) {
        const Vec3 e = pose_error(s.truth, s.estimate);
        acc += e(0) * e(0) + e(1) * e(1);
    }
    return std::sqrt(acc / static_cast<double>(log.steps.size()));
}

double time_average(const std::vector<double>& series) {
    if (series.empty()) return 0.0;
    double acc = 0.0;
    for (double v : series) acc += v;
    return acc / static_cast<double>(series.size());
}

double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0)) throw Error("incomplete gamma needs a > 0");
    if (x <= 0.0) return 0.0;
    const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
    constexpr double eps = 1e-16;
    constexpr int max_iter = 10000;
    if (x < a + 1.0) {
        // Series expansion.
        double term = 1.0 / a;
        double sum = term;
        for (int n = 1; n < max_iter; ++n) {
            term *= x / (a + n);
            sum += term;
            if (std::abs(term) < std::abs(sum) * eps) break;
        }
        return std::min(1.0, sum * std::exp(log_prefix));
    }
    // Continued fraction for Q(a, x), modified Lentz.
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < max_iter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < eps) break;
    }
    return std::max(0.0, 1.0 - std::exp(log_prefix) * h);
}

double chi2_quantile(double p, double dof) {
    if (!(p > 0.0 && p < 1.0)) throw Error("chi-square quantile needs p in (0, 1)");
    if (!(dof > 0.0)) throw Error("chi-square quantile needs dof > 0");
    const double a = 0.5 * dof;
    auto cdf = [a](double x) { return regularized_gamma_p(a, 0.5 * x); };
    auto pdf = [a](double x) {
        return std::exp((a - 1.0) * std::log(x) - 0.5 * x - a * std::log(2.0) - std::lgamma(a));
    };

    double lo = 0.0;
    double hi = std::max(1.0, dof);
    while (cdf(hi) < p) {
        lo = hi;
        hi *= 2.0;
    }
    // Newton on the CDF, falling back to bisection whenever a step leaves the bracket.
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 500; ++it) {
        const double f = cdf(x) - p;
        if (f > 0.0) hi = x; else lo = x;
        const double dens = x > 0.0 ? pdf(x) : 0.0;
        double next = dens > 0.0 ? x - f / dens : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-14 * std::max(1.0, x)) return next;
        x = next;
    }
    return x;
}

Chi2Band chi2_band(int n_runs, int state_dim, double confidence) {
    if (!(confidence > 0.0 && confidence < 1.0))
        throw ConfigError("confidence must lie in (0, 1)");
    if (n_runs < 1 || state_dim < 1) throw ConfigError("chi-square band needs n_runs >= 1 and state_dim >= 1");
    const double dof = static_cast<double>(n_runs) * state_dim;
    const double q = 0.5 * (1.0 - confidence);
    return {chi2_quantile(q, dof) / n_runs, chi2_quantile(1.0 - q, dof) / n_runs};
}

double in_band_fraction(const std::vector<double>& series, const Chi2Band& band) {
    if (series.empty()) return 0.0;
    std::size_t in = 0;
    for (double v : series)
        if (v >= band.lower && v <= band.upper) ++in;
    return static_cast<double>(in) / static_cast<double>(series.size());
}

EnsembleReport make_report(const std::vector<RunLog>& logs, double confidence) {
    EnsembleReport rep;
    const std::size_t n = common_length(logs);
    rep.t.reserve(n);
    for (const StepRecord& s : logs.front().steps) rep.t.push_back(s.t);
    rep.rmse_pos = rmse(logs);
    rep.rmse_heading = heading_rmse(logs);
    rep.avg_nees = average_nees(logs);
    rep.band = chi2_band(static_cast<int>(logs.size()), 3, confidence);
    rep.in_band_fraction = in_band_fraction(rep.avg_nees, rep.band);
    rep.mean_rmse_pos = time_average(rep.rmse_pos);
    for (const RunLog& log : logs) {
        RunMetrics m;
        m.run = log.summary.run;
        m.seed = log.summary.seed;
        m.rmse_pos = run_position_rmse(log);
        double h = 0.0;
        for (const StepRecord& s : log.steps) {
            const double e = pose_error(s.truth, s.estimate)(2);
            h += e * e;
        }
        m.rmse_heading = log.steps.empty() ? 0.0 : std::sqrt(h / static_cast<double>(log.steps.size()));
        m.mean_nees = time_average(nees_series(log));
        m.timeout = log.summary.timeout;
        rep.runs.push_back(m);
    }
    return rep;
}

}  // namespace anfekf
