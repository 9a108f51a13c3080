#include "aoisched/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace aoisched {

unsigned worker_count()
{
    if (const char* env = std::getenv("AOI_SCHED_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0)
            return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& task)
{
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    const auto worker = [&] {
        for (std::size_t k = next++; k < n && !stop; k = next++) {
            try {
                task(k);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
                stop = true;
            }
        }
    };
    const unsigned count = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n));
    if (count <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < count; ++w)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }
    if (error)
        std::rethrow_exception(error);
}

ScenarioConfig sweep_cell(const SweepSpec& spec, const std::string& kind, double value, Policy policy,
                          std::uint64_t seed)
{
    ScenarioConfig c = apply_sweep_value(spec.base, spec.param, value);
    if (!kind.empty()) {
        for (StreamConfig& s : c.streams) {
            s.traffic = with_kind(s.traffic, kind);
            s.params.lambda = effective_rate(s.traffic);
            s.pmf.reset();
        }
    }
    c.policy = policy;
    if (policy == Policy::mw_lc || policy == Policy::mw_ltr || policy == Policy::mw_enf)
        c.estimator.reset();
    c.seed = seed;
    if (spec.horizon)
        c.horizon = *spec.horizon;
    return c;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, unsigned threads)
{
    check_sweep(spec);
    const std::vector<std::string> kinds = spec.traffic_kinds.empty() ? std::vector<std::string>{""}
                                                                      : spec.traffic_kinds;
    struct Cell {
        std::size_t row;
        std::uint64_t seed;
    };
    std::vector<SweepRow> rows;
    std::vector<Cell> cells;
    for (const std::string& kind : kinds) {
        for (double v : spec.values) {
            for (Policy p : spec.policies) {
                rows.push_back({kind, v, p, 0.0, 0.0, 0.0, spec.seeds.size()});
                for (std::uint64_t s : spec.seeds)
                    cells.push_back({rows.size() - 1, s});
            }
        }
    }

    std::vector<double> ewsaoi(cells.size());
    std::vector<double> nmse(cells.size());
    parallel_for(cells.size(), threads, [&](std::size_t k) {
        const SweepRow& r = rows[cells[k].row];
        try {
            const ValidatedScenario sc = validate(sweep_cell(spec, r.traffic_kind, r.value, r.policy, cells[k].seed));
            RunOptions opt;
            opt.measure_runtime = false;
            const MetricsReport m = run(sc, opt);
            ewsaoi[k] = m.ewsaoi;
            nmse[k] = m.nmse_mean;
        } catch (const std::exception& e) {
            const std::string where = "cell (" + (r.traffic_kind.empty() ? std::string() : r.traffic_kind + ", ") +
                                      sweep_param_name(spec.param) + "=" + std::to_string(r.value) + ", " +
                                      policy_name(r.policy) + ", seed " + std::to_string(cells[k].seed) +
                                      "): " + e.what();
            if (dynamic_cast<const ValidationError*>(&e))
                throw ValidationError(where);
            throw std::runtime_error(where);
        }
    });

    for (std::size_t k = 0; k < cells.size(); ++k) {
        SweepRow& r = rows[cells[k].row];
        r.mean_ewsaoi += ewsaoi[k] / static_cast<double>(r.n_seeds);
        r.mean_nmse += nmse[k] / static_cast<double>(r.n_seeds);
    }
    for (std::size_t k = 0; k < cells.size(); ++k) {
        SweepRow& r = rows[cells[k].row];
        const double d = ewsaoi[k] - r.mean_ewsaoi;
        r.std_ewsaoi += d * d;
    }
    for (SweepRow& r : rows)
        r.std_ewsaoi = r.n_seeds > 1 ? std::sqrt(r.std_ewsaoi / static_cast<double>(r.n_seeds - 1)) : 0.0;

    std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
        if (a.traffic_kind != b.traffic_kind)
            return a.traffic_kind < b.traffic_kind;
        if (a.value != b.value)
            return a.value < b.value;
        return policy_name(a.policy) < policy_name(b.policy);
    });
    return rows;
}

DropAlignment drop_alignment(const StreamTrace& trace)
{
    const auto truth = drop_instants(std::span<const Slot>(trace.A));
    const auto est = drop_instants(std::span<const double>(trace.A_hat));
    std::vector<Slot> common;
    std::set_intersection(truth.begin(), truth.end(), est.begin(), est.end(), std::back_inserter(common));
    return {truth.size(), est.size(), common.size(), truth == est};
}

StudyResult estimator_study(const ScenarioConfig& base, const std::vector<Policy>& policies)
{
    if (policies.empty())
        throw ValidationError("policy list is empty");
    StudyResult out;
    out.reports.resize(policies.size());
    RunOptions opt;
    opt.trace = true;
    opt.measure_runtime = false;
    for (std::size_t k = 0; k < policies.size(); ++k) {
        ScenarioConfig c = base;
        c.policy = policies[k];
        if (policies[k] == Policy::mw_lc || policies[k] == Policy::mw_ltr || policies[k] == Policy::mw_enf)
            c.estimator.reset();
        out.reports[k] = run(validate(c), opt);
    }
    for (std::size_t k = 0; k < policies.size(); ++k) {
        const MetricsReport& m = out.reports[k];
        for (std::size_t i = 0; i < m.traces.size(); ++i)
            out.rows.push_back({policies[k], m.estimator, static_cast<StreamId>(i + 1), m.nmse[i],
                                drop_alignment(m.traces[i])});
    }
    return out;
}

} // namespace aoisched
