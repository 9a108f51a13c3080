#pragma once

#include "aoisched/scenario.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace aoisched {

struct RunOptions {
    /// Record per-stream paths (truth, estimates, channel outcomes).
    bool trace = false;
    /// Record every scheduled UL attempt in the replay event format.
    bool events = false;
    /// Time estimation and scheduling per slot.
    bool measure_runtime = true;
    /// With `trace`, record slots 1, 1+stride, 1+2*stride, ...
    Slot trace_stride = 1;
};

struct RuntimeStats {
    double mean_us = 0.0;
    double p99_us = 0.0;
    double max_us = 0.0;
};

/// Per-stream record of one run. Index k holds slot 1 + k * trace_stride.
struct StreamTrace {
    std::vector<Slot> A;              ///< true AoI at the start of the slot
    std::vector<Slot> a;              ///< true system time after generation
    std::vector<double> A_hat;        ///< estimated AoI aligned with A
    std::vector<double> a_hat;        ///< estimated system time after the slot's update
    std::vector<double> gamma_u_hat;  ///< after the slot's update
    std::vector<double> gamma_d_hat;  ///< after the slot's update
    std::vector<std::uint8_t> g;      ///< generation indicator
    std::vector<std::uint8_t> served; ///< scheduled and UL success
    std::vector<std::uint8_t> c_d;    ///< forwarding outcome committed for a served slot
    std::vector<double> p_u;          ///< UL reliability in force
};

/// One scheduled UL attempt: the replay input format.
struct UlEvent {
    Slot t = 0;
    StreamId stream = 0;
    bool scheduled = true;
    bool c_u = false;
    std::optional<std::uint64_t> packet_id;

    bool operator==(const UlEvent&) const = default;
};

struct MetricsReport {
    std::string policy;
    std::string estimator;
    std::uint64_t seed = 0;
    Slot horizon = 0;
    int n_streams = 0;
    int k_budget = 0;

    double ewsaoi = 0.0;
    std::vector<double> mean_aoi; ///< per-stream time average of A
    std::vector<double> nmse;     ///< per-stream NMSE of the aligned AoI estimate
    double nmse_mean = 0.0;
    std::vector<double> weighted_sum; ///< per slot: sum_i alpha_i A_i(t)

    std::uint64_t grants = 0;
    std::uint64_t ul_successes = 0;
    std::uint64_t deliveries = 0;

    RuntimeStats runtime;

    std::vector<StreamTrace> traces;
    std::vector<UlEvent> events;
};

MetricsReport run(const ValidatedScenario& scenario, const RunOptions& options = {});

/// (1/(T N)) sum_t sum_i alpha_i A_i(t); aoi[i][k] is stream i at slot k+1.
double ewsaoi(std::span<const std::vector<Slot>> aoi, std::span<const double> alpha);

/// sum (est - truth)^2 / sum truth^2.
double nmse(std::span<const double> estimate, std::span<const Slot> truth);

/// Empirical CDF: distinct sorted values paired with P(X <= value).
std::vector<std::pair<double, double>> aoi_cdf(std::span<const double> series);

/// Slots 1, 1+stride, 1+2*stride, ... paired with their values.
std::vector<std::pair<Slot, double>> sample_path(std::span<const double> series, Slot stride);

/// Slots t >= 2 at which the series strictly decreases.
template <class T>
std::vector<Slot> drop_instants(std::span<const T> series)
{
    std::vector<Slot> out;
    for (std::size_t k = 1; k < series.size(); ++k) {
        if (series[k] < series[k - 1])
            out.push_back(static_cast<Slot>(k + 1));
    }
    return out;
}

struct BenchRow {
    std::string pipeline;
    int n_streams = 0;
    RuntimeStats runtime;
};

/// Per-slot estimation+scheduling runtime for each N and pipeline ("mw_lc",
/// "mw_enf", "noop"). The network of size N cycles the streams of `base`
/// (bench_scenario when absent). Each row averages `reps` runs.
std::vector<BenchRow> bench_runtime(std::span<const int> n_values, int reps, std::span<const std::string> pipelines,
                                    const std::optional<ScenarioConfig>& base = std::nullopt, Slot horizon = 2000,
                                    std::uint64_t seed = 1);

/// Scenario used by bench_runtime: Bernoulli traffic at rate 0.2, frame-held
/// reliabilities on [0.3, 1], K = 2.
ScenarioConfig bench_scenario(int n_streams, Policy policy, Slot horizon, std::uint64_t seed);

} // namespace aoisched
