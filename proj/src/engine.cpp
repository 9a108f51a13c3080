#include "aoisched/engine.hpp"

#include "aoisched/estimator_lc.hpp"
#include "aoisched/scenario_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>

namespace aoisched {

namespace {

using Clock = std::chrono::steady_clock;

RuntimeStats summarize(std::vector<double> samples)
{
    RuntimeStats s;
    if (samples.empty())
        return s;
    s.mean_us = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
    s.max_us = *std::max_element(samples.begin(), samples.end());
    const auto k = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(samples.size()))) - 1;
    std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(k), samples.end());
    s.p99_us = samples[k];
    return s;
}

template <class E>
[[noreturn]] void rethrow_at(const E& e, Slot t)
{
    throw E("slot " + std::to_string(t) + ": " + e.what());
}

std::unique_ptr<StreamEstimator> make_estimator(const ValidatedScenario& sc, std::size_t i)
{
    const StreamParams& p = sc.config().streams[i].params;
    if (sc.estimator() == EstimatorKind::oracle)
        return std::make_unique<OracleEstimator>(p, sc.pmf(i));
    return std::make_unique<LcEstimator>(p);
}

/// Simulation state for one run.
class Simulation {
public:
    Simulation(const ValidatedScenario& sc, const RunOptions& opt)
        : sc_(sc), cfg_(sc.config()), opt_(opt), n_(static_cast<std::size_t>(cfg_.n_streams)), rr_(cfg_.n_streams),
          pf_(cfg_.n_streams, cfg_.pf_time_constant), sched_rng_(cfg_.seed, StreamPurpose::scheduler, 0)
    {
        queues_.resize(n_);
        gamma_d_.assign(n_, 0);
        p_u_.assign(n_, 0.0);
        eligible_ = std::make_unique<bool[]>(n_);
        views_.resize(n_);
        scheduled_.assign(n_, false);
        c_u_.assign(n_, false);
        nmse_num_.assign(n_, 0.0);
        nmse_den_.assign(n_, 0.0);
        aoi_sum_.assign(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            const StreamConfig& s = cfg_.streams[i];
            params_.push_back(s.params);
            p_bar_.push_back(mean_reliability(s.channel, s.params.id));
            traffic_rng_.emplace_back(cfg_.seed, StreamPurpose::traffic, static_cast<std::uint64_t>(s.params.id));
            estimators_.push_back(make_estimator(sc, i));
            delay_line_.emplace_back(static_cast<std::size_t>(s.params.theta + 1), 0.0);
        }
        report_.policy = policy_name(cfg_.policy);
        report_.estimator = estimator_name(sc.estimator());
        report_.seed = cfg_.seed;
        report_.horizon = cfg_.horizon;
        report_.n_streams = cfg_.n_streams;
        report_.k_budget = cfg_.k_budget;
        report_.weighted_sum.reserve(static_cast<std::size_t>(cfg_.horizon));
        if (opt_.trace)
            report_.traces.resize(n_);
        if (opt_.measure_runtime)
            runtime_us_.reserve(static_cast<std::size_t>(cfg_.horizon));
    }

    MetricsReport run()
    {
        for (Slot t = 1; t <= cfg_.horizon; ++t) {
            try {
                step(t);
            } catch (const ValidationError& e) {
                rethrow_at(e, t);
            } catch (const OracleError& e) {
                rethrow_at(e, t);
            } catch (const ContractViolation& e) {
                rethrow_at(e, t);
            }
        }
        finish();
        return std::move(report_);
    }

private:
    void step(Slot t)
    {
        const Slot frame_len = cfg_.frame_len;
        const double tt = static_cast<double>(t);
        std::vector<Slot> aoi(n_);
        for (std::size_t i = 0; i < n_; ++i)
            aoi[i] = t - gamma_d_[i];

        std::vector<std::uint8_t> g(n_);
        for (std::size_t i = 0; i < n_; ++i)
            g[i] = static_cast<std::uint8_t>(
                step_generation(cfg_.streams[i].traffic, queues_[i], t, traffic_rng_[i]));

        if ((t - 1) % frame_len == 0) {
            for (std::size_t i = 0; i < n_; ++i)
                p_u_[i] = reliability(cfg_.streams[i].channel, params_[i].id, t, frame_len, cfg_.seed);
        }

        const auto t0 = Clock::now();
        for (std::size_t i = 0; i < n_; ++i) {
            eligible_[i] = queues_[i].has_packet;
            views_[i] = estimators_[i]->prepare(t);
        }
        const ScheduleDecision decision = decide(t);
        const auto t1 = Clock::now();

        std::fill(scheduled_.begin(), scheduled_.end(), false);
        std::fill(c_u_.begin(), c_u_.end(), false);
        for (StreamId id : decision.selected) {
            const auto i = static_cast<std::size_t>(id - 1);
            scheduled_[i] = true;
            c_u_[i] = realize_uplink(p_u_[i], keyed_uniform(cfg_.seed, StreamPurpose::uplink,
                                                             static_cast<std::uint64_t>(id),
                                                             static_cast<std::uint64_t>(t)));
        }

        const auto t2 = Clock::now();
        for (std::size_t i = 0; i < n_; ++i) {
            const bool success = scheduled_[i] && c_u_[i];
            estimators_[i]->observe(t, scheduled_[i], c_u_[i],
                                    success ? std::optional<std::uint64_t>(queues_[i].packet_id) : std::nullopt);
        }
        const auto t3 = Clock::now();
        if (opt_.measure_runtime)
            runtime_us_.push_back(std::chrono::duration<double, std::micro>((t1 - t0) + (t3 - t2)).count());

        std::vector<std::uint8_t> c_d(n_, 0);
        for (std::size_t i = 0; i < n_; ++i) {
            if (scheduled_[i]) {
                ++report_.grants;
                if (opt_.events)
                    report_.events.push_back({t, params_[i].id, true, c_u_[i],
                                              c_u_[i] ? std::optional<std::uint64_t>(queues_[i].packet_id)
                                                      : std::nullopt});
            }
            if (!(scheduled_[i] && c_u_[i]))
                continue;
            ++report_.ul_successes;
            const double u = keyed_uniform(cfg_.seed, StreamPurpose::forwarding,
                                           static_cast<std::uint64_t>(params_[i].id), static_cast<std::uint64_t>(t));
            c_d[i] = u < params_[i].p_dest;
            pipeline_.enqueue(params_[i].id, queues_[i].gen_time, t, params_[i].p_dest, params_[i].theta, u);
        }

        for (const Delivery& d : pipeline_.drain_deliveries(t)) {
            auto& gd = gamma_d_[static_cast<std::size_t>(d.stream - 1)];
            gd = std::max(gd, d.gen_time);
            ++report_.deliveries;
        }

        double weighted = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double A = static_cast<double>(aoi[i]);
            weighted += params_[i].alpha * A;
            aoi_sum_[i] += A;

            auto& line = delay_line_[i];
            const auto slot = static_cast<std::size_t>(t) % line.size();
            const double A_hat = tt - line[slot];
            const EstimatorState& e = estimators_[i]->estimate();
            line[slot] = e.gamma_d_hat;
            nmse_num_[i] += (A_hat - A) * (A_hat - A);
            nmse_den_[i] += A * A;

            if (opt_.trace && (t - 1) % opt_.trace_stride == 0) {
                StreamTrace& tr = report_.traces[i];
                tr.A.push_back(aoi[i]);
                tr.a.push_back(system_time(queues_[i], t));
                tr.A_hat.push_back(A_hat);
                tr.a_hat.push_back(e.a_hat);
                tr.gamma_u_hat.push_back(e.gamma_u_hat);
                tr.gamma_d_hat.push_back(e.gamma_d_hat);
                tr.g.push_back(g[i]);
                tr.served.push_back(static_cast<std::uint8_t>(scheduled_[i] && c_u_[i]));
                tr.c_d.push_back(c_d[i]);
                tr.p_u.push_back(p_u_[i]);
            }
        }
        report_.weighted_sum.push_back(weighted);
        weighted_total_ += weighted;
    }

    ScheduleDecision decide(Slot t)
    {
        const int k = cfg_.k_budget;
        switch (cfg_.policy) {
        case Policy::mw_lc:
            return mw_lc_select(mw_weights(params_, p_u_, views_, eligible_flags()), k, t);
        case Policy::mw_ltr:
            return mw_ltr_select(params_, p_bar_, views_, eligible_flags(), k, t);
        case Policy::mw_enf:
            return mw_enf_select(params_, p_u_, views_, eligible_flags(), k, t);
        case Policy::rr:
            return rr_.select(eligible_flags(), k, t);
        case Policy::pf: {
            ScheduleDecision d = pf_.select(p_u_, eligible_flags(), k, t);
            pf_.update(d, p_u_);
            return d;
        }
        case Policy::random:
            return random_select(eligible_flags(), k, sched_rng_, t);
        case Policy::noop:
            break;
        }
        ScheduleDecision d;
        d.slot = t;
        return d;
    }

    std::span<const bool> eligible_flags() const { return {eligible_.get(), n_}; }

    void finish()
    {
        const double T = static_cast<double>(cfg_.horizon);
        report_.ewsaoi = weighted_total_ / (T * static_cast<double>(n_));
        for (std::size_t i = 0; i < n_; ++i) {
            report_.mean_aoi.push_back(aoi_sum_[i] / T);
            report_.nmse.push_back(nmse_num_[i] / nmse_den_[i]);
        }
        report_.nmse_mean =
            std::accumulate(report_.nmse.begin(), report_.nmse.end(), 0.0) / static_cast<double>(n_);
        if (opt_.measure_runtime)
            report_.runtime = summarize(std::move(runtime_us_));
    }

    const ValidatedScenario& sc_;
    const ScenarioConfig& cfg_;
    RunOptions opt_;
    std::size_t n_;

    std::vector<StreamParams> params_;
    std::vector<double> p_bar_;
    std::vector<SourceQueue> queues_;
    std::vector<RandomStream> traffic_rng_;
    std::vector<std::unique_ptr<StreamEstimator>> estimators_;
    std::vector<Slot> gamma_d_;
    std::vector<double> p_u_;
    std::unique_ptr<bool[]> eligible_;
    std::vector<EstimatorState> views_;
    std::vector<bool> scheduled_;
    std::vector<bool> c_u_;
    ForwardingPipeline pipeline_;
    RoundRobin rr_;
    ProportionalFair pf_;
    RandomStream sched_rng_;

    std::vector<std::vector<double>> delay_line_;
    std::vector<double> nmse_num_;
    std::vector<double> nmse_den_;
    std::vector<double> aoi_sum_;
    double weighted_total_ = 0.0;
    std::vector<double> runtime_us_;
    MetricsReport report_;
};

} // namespace

MetricsReport run(const ValidatedScenario& scenario, const RunOptions& options)
{
    return Simulation(scenario, options).run();
}

double ewsaoi(std::span<const std::vector<Slot>> aoi, std::span<const double> alpha)
{
    if (aoi.size() != alpha.size() || aoi.empty())
        throw ContractViolation("ewsaoi needs one AoI path per weight");
    const std::size_t T = aoi.front().size();
    double total = 0.0;
    for (std::size_t i = 0; i < aoi.size(); ++i) {
        if (aoi[i].size() != T)
            throw ContractViolation("AoI paths differ in length");
        for (Slot A : aoi[i])
            total += alpha[i] * static_cast<double>(A);
    }
    return total / (static_cast<double>(T) * static_cast<double>(aoi.size()));
}

double nmse(std::span<const double> estimate, std::span<const Slot> truth)
{
    if (estimate.size() != truth.size())
        throw ContractViolation("nmse needs aligned paths");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const double A = static_cast<double>(truth[k]);
        num += (estimate[k] - A) * (estimate[k] - A);
        den += A * A;
    }
    return num / den;
}

std::vector<std::pair<double, double>> aoi_cdf(std::span<const double> series)
{
    std::vector<double> sorted(series.begin(), series.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::pair<double, double>> out;
    const double n = static_cast<double>(sorted.size());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        if (k + 1 < sorted.size() && sorted[k + 1] == sorted[k])
            continue;
        out.emplace_back(sorted[k], static_cast<double>(k + 1) / n);
    }
    return out;
}

std::vector<std::pair<Slot, double>> sample_path(std::span<const double> series, Slot stride)
{
    if (stride < 1)
        throw ContractViolation("decimation stride must be >= 1");
    std::vector<std::pair<Slot, double>> out;
    for (std::size_t k = 0; k < series.size(); k += static_cast<std::size_t>(stride))
        out.emplace_back(static_cast<Slot>(k + 1), series[k]);
    return out;
}

ScenarioConfig bench_scenario(int n_streams, Policy policy, Slot horizon, std::uint64_t seed)
{
    ScenarioConfig c;
    c.description = "synthetic runtime benchmark";
    c.n_streams = n_streams;
    c.k_budget = std::min(2, n_streams);
    c.horizon = horizon;
    c.seed = seed;
    c.policy = policy;
    for (int i = 1; i <= n_streams; ++i) {
        StreamConfig s;
        s.params = {i, 0.2, 0.8, 5, 1.0 + (i - 1) % 5, 1.0 + (i - 1) % 5};
        s.traffic = BernoulliTraffic{0.2};
        s.channel = FrameIidUniformChannel{0.3, 1.0};
        c.streams.push_back(std::move(s));
    }
    return c;
}

std::vector<BenchRow> bench_runtime(std::span<const int> n_values, int reps, std::span<const std::string> pipelines,
                                    const std::optional<ScenarioConfig>& base, Slot horizon, std::uint64_t seed)
{
    if (reps < 1)
        throw ValidationError("reps must be >= 1");
    std::vector<BenchRow> rows;
    for (const std::string& name : pipelines) {
        const Policy policy = name == "noop" ? Policy::noop : parse_policy(name);
        for (int n : n_values) {
            BenchRow row{name, n, {}};
            for (int r = 0; r < reps; ++r) {
                const std::uint64_t s = seed + static_cast<std::uint64_t>(r);
                ScenarioConfig c = bench_scenario(n, policy, horizon, s);
                if (base) {
                    c = apply_sweep_value(*base, SweepParam::n_streams, n);
                    c.k_budget = std::min(c.k_budget, n);
                    c.policy = policy;
                    c.estimator.reset();
                    c.horizon = horizon;
                    c.seed = s;
                }
                const ValidatedScenario sc = validate(c);
                const MetricsReport m = run(sc);
                row.runtime.mean_us += m.runtime.mean_us / reps;
                row.runtime.p99_us += m.runtime.p99_us / reps;
                row.runtime.max_us = std::max(row.runtime.max_us, m.runtime.max_us);
            }
            rows.push_back(row);
        }
    }
    return rows;
}

} // namespace aoisched
