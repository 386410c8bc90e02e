#include <exception>

#include <omp.h>

#include "anfekf/errors.hpp"
#include "anfekf/simulator.hpp"

namespace anfekf {

namespace {

void check_runs(int n_runs) {
    if (n_runs < 1) throw ConfigError("number of runs must be >= 1");
}

}  // namespace

std::vector<RunLog> run_monte_carlo_serial(const Scenario& scenario, Variant variant, int n_runs,
                                           std::uint64_t base_seed, const FilterSettings& settings) {
    check_runs(n_runs);
    std::vector<RunLog> logs;
    logs.reserve(static_cast<std::size_t>(n_runs));
    for (int i = 0; i < n_runs; ++i) {
        logs.push_back(run_once(scenario, variant, base_seed + static_cast<std::uint64_t>(i), settings));
        logs.back().summary.run = i;
    }
    return logs;
}

std::vector<RunLog> run_monte_carlo(const Scenario& scenario, Variant variant, int n_runs,
                                    std::uint64_t base_seed, const MonteCarloOptions& options) {
    check_runs(n_runs);
    scenario.validate();
    std::vector<RunLog> logs(static_cast<std::size_t>(n_runs));
    const int threads = options.threads > 0 ? options.threads : omp_get_max_threads();

    // Runs share only the read-only scenario; each writes its own slot.
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (int i = 0; i < n_runs; ++i) {
        try {
            logs[i] = run_once(scenario, variant, base_seed + static_cast<std::uint64_t>(i), options.filter);
            logs[i].summary.run = i;
        } catch (...) {
#pragma omp critical(anfekf_mc_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return logs;
}

}  // namespace anfekf
