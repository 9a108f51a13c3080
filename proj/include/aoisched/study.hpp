#pragma once

#include "aoisched/engine.hpp"
#include "aoisched/scenario_io.hpp"

#include <functional>
#include <string>
#include <vector>

namespace aoisched {

/// Worker count for independent runs: AOI_SCHED_THREADS if set and positive,
/// otherwise the hardware concurrency.
unsigned worker_count();

/// Runs task(0..n-1) on up to `threads` workers. The first exception is
/// rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& task);

struct SweepRow {
    std::string traffic_kind; ///< empty when the base traffic is kept
    double value = 0.0;
    Policy policy = Policy::mw_lc;
    double mean_ewsaoi = 0.0;
    double std_ewsaoi = 0.0; ///< sample standard deviation over seeds
    double mean_nmse = 0.0;
    std::size_t n_seeds = 0;
};

/// Every (kind, value, policy, seed) cell. Rows are sorted by (kind, value,
/// policy). A failing cell aborts with its coordinates in the message.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, unsigned threads = worker_count());

/// Scenario for one sweep cell.
ScenarioConfig sweep_cell(const SweepSpec& spec, const std::string& kind, double value, Policy policy,
                          std::uint64_t seed);

struct DropAlignment {
    std::size_t true_drops = 0;
    std::size_t estimated_drops = 0;
    std::size_t common = 0;
    bool equal = false;
};

DropAlignment drop_alignment(const StreamTrace& trace);

struct StudyRow {
    Policy policy = Policy::mw_lc;
    std::string estimator;
    StreamId stream = 0;
    double nmse = 0.0;
    DropAlignment drops;
};

struct StudyResult {
    std::vector<StudyRow> rows;
    std::vector<MetricsReport> reports; ///< one per policy, with traces
};

/// Runs the scenario once per policy with tracing and reports per-stream NMSE
/// and drop-instant alignment.
StudyResult estimator_study(const ScenarioConfig& base, const std::vector<Policy>& policies);

} // namespace aoisched
