#include "aoisched/engine.hpp"
#include "aoisched/estimator_lc.hpp"
#include "aoisched/estimator_oracle.hpp"
#include "aoisched/random.hpp"
#include "aoisched/scenario_io.hpp"
#include "aoisched/scheduling.hpp"
#include "aoisched/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

using namespace aoisched;

namespace {

using Clock = std::chrono::steady_clock;

const std::filesystem::path kScenarios = std::filesystem::path(AOISCHED_SOURCE_DIR) / "scenarios";

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...)
{
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

ObservationState random_state(RandomStream& rng, Slot max_gap, Slot& t)
{
    const Slot tpb = rng.uniform_int(0, 1000);
    const Slot tp = tpb - rng.uniform_int(0, std::min<Slot>(tpb, 10));
    const Slot tc = tpb + rng.uniform_int(1, max_gap);
    const Slot tcb = tc + rng.uniform_int(0, max_gap);
    t = tcb + rng.uniform_int(0, max_gap);
    return {tp, tpb, tc, tcb, 1};
}

struct BoolMask {
    explicit BoolMask(std::size_t n) : flags(new bool[n]), size(n) { std::fill_n(flags.get(), n, true); }
    std::span<const bool> view() const { return {flags.get(), size}; }
    std::unique_ptr<bool[]> flags;
    std::size_t size;
};

Outcome criterion_1()
{
    const auto start = Clock::now();
    RandomStream rng(101);
    double worst = 0.0;
    const int states = 10000;
    for (int k = 0; k < states; ++k) {
        Slot t = 0;
        const auto s = random_state(rng, 1000, t);
        const double lambda = 0.01 + 0.99 * rng.uniform();
        double sd = 0.0;
        for (Slot phi = s.tau_pre_bar + 1; phi <= s.tau_cur; ++phi)
            sd += q_d(s, lambda, phi);
        double su = 0.0;
        for (Slot phi = s.tau_pre_bar + 1; phi <= t; ++phi)
            su += q_u(s, lambda, t, phi);
        worst = std::max({worst, std::abs(sd - 1.0), std::abs(su - 1.0)});
    }
    const double secs = seconds_since(start);
    return {worst <= 1e-9 && secs < 5.0,
            fmt("%d states, max |sum q - 1| = %.3g, %.2f s (limit 5 s)", states, worst, secs)};
}

Outcome criterion_2()
{
    const auto start = Clock::now();
    RandomStream rng(202);
    const int states = 1000;
    double worst_mass = 0.0;
    double worst_mean = 0.0;
    int mismatched = 0;
    for (int k = 0; k < states; ++k) {
        const double lambda = 0.05 + 0.95 * rng.uniform();
        const Slot tpb = rng.uniform_int(0, 50);
        const Slot tc = tpb + rng.uniform_int(1, 8);
        const Slot tcb = tc + rng.uniform_int(0, 6);
        const Slot t = std::min<Slot>(tcb + rng.uniform_int(0, 6), tpb + 20);
        if (t < tcb) {
            --k;
            continue;
        }
        const ObservationState s{std::max<Slot>(0, tpb - 1), tpb, tc, tcb, 1};
        const auto exact = exact_posterior_current(s, InterGenerationPmf::geometric(lambda), t, 20);
        const auto lc = estimate_timestamps(s, lambda, t);
        double dm = 0.0;
        for (std::size_t j = 0; j < exact.u.support.size(); ++j)
            dm = std::max(dm, std::abs(q_u(s, lambda, t, exact.u.support[j]) - exact.u.mass[j]));
        for (std::size_t j = 0; j < exact.d_cur.support.size(); ++j)
            dm = std::max(dm, std::abs(q_d(s, lambda, exact.d_cur.support[j]) - exact.d_cur.mass[j]));
        const double dmean = std::max(std::abs(lc.gamma_u_hat - exact.u.mean),
                                      std::abs(lc.gamma_d_cur_hat - exact.d_cur.mean));
        worst_mass = std::max(worst_mass, dm);
        worst_mean = std::max(worst_mean, dmean);
        if (dm > 1e-9 || dmean > 1e-9)
            ++mismatched;
    }
    const double secs = seconds_since(start);

    const ObservationState worked{0, 0, 2, 2, 1};
    const auto ex = exact_posterior_current(worked, InterGenerationPmf::geometric(0.5), 4);
    return {mismatched == 0 && secs < 30.0,
            fmt("%d states, %d outside 1e-9, max |dq| = %.3g, max |dmean| = %.3g, %.2f s; worked state: "
                "exact q_u = [%.6g, %.6g, %.6g, %.6g] vs rate-based [1/36, 1/12, 2/9, 2/3]",
                states, mismatched, worst_mass, worst_mean, secs, ex.u.mass[0], ex.u.mass[1], ex.u.mass[2],
                ex.u.mass[3])};
}

Outcome criterion_3()
{
    RandomStream rng(303);
    double worst = 0.0;
    long checks = 0;
    int decision_mismatch = 0;
    int timestamp_mismatch = 0;
    const std::size_t n = 4;
    for (int run = 0; run < 200; ++run) {
        std::vector<StreamParams> pa;
        std::vector<StreamParams> pb;
        for (std::size_t i = 0; i < n; ++i) {
            const double lambda = 0.05 + 0.95 * rng.uniform();
            StreamParams p{static_cast<StreamId>(i + 1), lambda, 0.1 + 0.9 * rng.uniform(), rng.uniform_int(0, 20),
                           1.0, 0.5 + 2.0 * rng.uniform()};
            pa.push_back(p);
            p.theta = rng.uniform_int(0, 20);
            pb.push_back(p);
        }
        std::vector<ObservationState> sa(n), sb(n);
        std::vector<EstimatorState> ea(n), eb(n);
        std::vector<std::uint64_t> ids(n, 0);
        BoolMask all(n);
        for (Slot t = 1; t <= 300; ++t) {
            std::vector<double> rel(n);
            for (std::size_t i = 0; i < n; ++i) {
                if (t == 1 || rng.bernoulli(pa[i].lambda))
                    ++ids[i];
                rel[i] = rng.uniform();
                ea[i] = lc_prepare(ea[i], sa[i], pa[i], t);
                eb[i] = lc_prepare(eb[i], sb[i], pb[i], t);
            }
            const auto da = mw_lc_select(mw_weights(pa, rel, ea, all.view()), 2, t);
            const auto db = mw_lc_select(mw_weights(pb, rel, eb, all.view()), 2, t);
            if (da.selected != db.selected)
                ++decision_mismatch;
            for (std::size_t i = 0; i < n; ++i) {
                const bool sched = std::find(da.selected.begin(), da.selected.end(), static_cast<StreamId>(i + 1)) !=
                                   da.selected.end();
                const bool ok = sched && rng.bernoulli(rel[i]);
                const auto pid = ok ? std::optional<std::uint64_t>(ids[i]) : std::nullopt;
                ea[i] = lc_step(ea[i], sa[i], pa[i], t, sched, ok, pid);
                eb[i] = lc_step(eb[i], sb[i], pb[i], t, sched, ok, pid);
                for (const auto* pe : {&ea[i], &eb[i]}) {
                    const Slot theta = pe == &ea[i] ? pa[i].theta : pb[i].theta;
                    const double lhs = pe->A_hat - pe->a_hat - static_cast<double>(theta);
                    const double rhs = pe->gamma_u_hat - pe->gamma_d_hat;
                    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
                    ++checks;
                }
                if (ea[i].gamma_u_hat != eb[i].gamma_u_hat || ea[i].gamma_d_hat != eb[i].gamma_d_hat)
                    ++timestamp_mismatch;
            }
        }
    }
    return {worst <= 1e-12 && decision_mismatch == 0 && timestamp_mismatch == 0,
            fmt("%ld identity checks, max rel. error %.3g; %d decision and %d timestamp differences under theta "
                "perturbation",
                checks, worst, decision_mismatch, timestamp_mismatch)};
}

Outcome criterion_4()
{
    RandomStream rng(404);
    int traces = 0;
    int mismatched = 0;
    RunOptions opt;
    opt.trace = true;
    opt.measure_runtime = false;
    for (int k = 0; k < 100; ++k) {
        const int n = static_cast<int>(rng.uniform_int(1, 5));
        ScenarioConfig c;
        c.n_streams = n;
        c.k_budget = static_cast<int>(rng.uniform_int(1, n));
        c.horizon = 1000;
        c.seed = static_cast<std::uint64_t>(rng.uniform_int(1, 1 << 30));
        c.policy = static_cast<Policy>(rng.uniform_int(0, 5));
        for (int i = 1; i <= n; ++i) {
            StreamConfig s;
            const int kind = static_cast<int>(rng.uniform_int(0, 2));
            if (kind == 0)
                s.traffic = BernoulliTraffic{0.05 + 0.95 * rng.uniform()};
            else if (kind == 1)
                s.traffic = PeriodicTraffic{rng.uniform_int(1, 12)};
            else {
                const Slot lo = rng.uniform_int(1, 6);
                s.traffic = UniformIntegerTraffic{lo, lo + rng.uniform_int(0, 6)};
            }
            s.params = {i, effective_rate(s.traffic), 0.1 + 0.9 * rng.uniform(), rng.uniform_int(0, 10), 1.0, 1.0};
            s.channel = FrameIidUniformChannel{0.05, 1.0};
            c.streams.push_back(s);
        }
        const auto m = run(validate(c), opt);
        for (int i = 0; i < n; ++i) {
            const StreamTrace& tr = m.traces[static_cast<std::size_t>(i)];
            const Slot theta = c.streams[static_cast<std::size_t>(i)].params.theta;
            // a(t) = 0 on a generation, else a(t-1) + 1.
            bool ok = true;
            Slot a = 0;
            for (std::size_t k2 = 0; k2 < tr.a.size(); ++k2) {
                a = tr.g[k2] ? 0 : a + 1;
                ok = ok && tr.a[k2] == a;
            }
            // A(1) = 1; A(t+1) = a(t-theta) + theta + 1 on a delivery, else A(t) + 1.
            Slot A = 1;
            for (std::size_t k2 = 0; k2 < tr.A.size(); ++k2) {
                ok = ok && tr.A[k2] == A;
                const Slot sent = static_cast<Slot>(k2 + 1) - theta;
                const auto si = static_cast<std::size_t>(sent - 1);
                const bool delivered = sent >= 1 && tr.served[si] && tr.c_d[si];
                A = delivered ? tr.a[si] + theta + 1 : A + 1;
            }
            ++traces;
            if (!ok)
                ++mismatched;
        }
    }
    return {mismatched == 0, fmt("%d stream paths over 100 runs, %d differ from the recursions", traces, mismatched)};
}

Outcome criterion_5()
{
    RandomStream rng(505);
    int scale_fail = 0, positivity_fail = 0, tie_fail = 0;
    const int cases = 10000;
    for (int k = 0; k < cases; ++k) {
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 20));
        const int budget = static_cast<int>(rng.uniform_int(1, static_cast<std::int64_t>(n)));
        std::vector<double> w(n);
        for (double& x : w)
            x = rng.bernoulli(0.5) ? static_cast<double>(rng.uniform_int(-4, 8)) : 20.0 * rng.uniform() - 5.0;
        const auto d = mw_lc_select(w, budget);

        std::vector<double> scaled(w);
        const double c = std::exp(6.0 * rng.uniform() - 3.0);
        for (double& x : scaled)
            x *= c;
        if (mw_lc_select(scaled, budget).selected != d.selected)
            ++scale_fail;

        for (StreamId id : d.selected)
            if (!(w[static_cast<std::size_t>(id - 1)] > 0.0))
                ++positivity_fail;

        // Reference: stable sort by weight descending keeps the lowest id first among ties.
        std::vector<StreamId> order;
        for (std::size_t i = 0; i < n; ++i)
            if (w[i] > 0.0)
                order.push_back(static_cast<StreamId>(i + 1));
        std::stable_sort(order.begin(), order.end(), [&](StreamId a, StreamId b) {
            return w[static_cast<std::size_t>(a - 1)] > w[static_cast<std::size_t>(b - 1)];
        });
        order.resize(std::min(order.size(), static_cast<std::size_t>(budget)));
        if (order != d.selected || mw_lc_select(w, budget).selected != d.selected)
            ++tie_fail;
    }
    return {scale_fail == 0 && positivity_fail == 0 && tie_fail == 0,
            fmt("%d weight vectors: %d scaling, %d positivity, %d tie-break violations", cases, scale_fail,
                positivity_fail, tie_fail)};
}

Outcome criterion_6()
{
    const auto start = Clock::now();
    const SweepSpec spec = load_sweep(kScenarios / "fig4_sweep.json");
    const auto rows = run_sweep(spec);
    const double secs = seconds_since(start);

    std::map<std::pair<std::string, double>, std::map<Policy, double>> cell;
    for (const SweepRow& r : rows)
        cell[{r.traffic_kind, r.value}][r.policy] = r.mean_ewsaoi;
    int order_fail = 0;
    int gap_fail = 0;
    double worst_gap = 0.0;
    std::string table;
    for (const auto& [key, v] : cell) {
        const double lc = v.at(Policy::mw_lc);
        const double enf = v.at(Policy::mw_enf);
        const double rr = v.at(Policy::rr);
        const double pf = v.at(Policy::pf);
        const double gap = std::abs(lc - enf) / enf;
        worst_gap = std::max(worst_gap, gap);
        if (!(lc < rr && lc < pf))
            ++order_fail;
        if (gap > 0.10)
            ++gap_fail;
        table += fmt("\n    %-15s E[X]=%-3g mw_lc=%.3f mw_enf=%.3f rr=%.3f pf=%.3f gap=%.1f%%", key.first.c_str(),
                     key.second, lc, enf, rr, pf, 100.0 * gap);
    }
    return {order_fail == 0 && gap_fail == 0 && secs < 600.0,
            fmt("%zu cells: %d ordering failures, %d gap failures (max gap %.1f%%), %.0f s (limit 600 s)",
                cell.size(), order_fail, gap_fail, 100.0 * worst_gap, secs) +
                table};
}

Outcome criterion_7()
{
    const auto start = Clock::now();
    std::vector<int> ns;
    for (int n = 5; n <= 50; n += 5)
        ns.push_back(n);
    const std::vector<std::string> pipelines{"mw_lc"};
    const auto rows = bench_runtime(ns, 3, pipelines, load_scenario(kScenarios / "fig1_bench.json"), 2000, 1);
    const double secs = seconds_since(start);
    double worst = 0.0;
    std::string table;
    for (const BenchRow& r : rows) {
        worst = std::max(worst, r.runtime.mean_us);
        table += fmt(" N=%d:%.2fus", r.n_streams, r.runtime.mean_us);
    }
    const double ratio = rows.back().runtime.mean_us / rows.front().runtime.mean_us;
    return {worst <= 1000.0 && ratio <= 15.0 && secs < 120.0,
            fmt("max mean per-slot time %.2f us (budget 1000 us), N=50/N=5 ratio %.2f (limit 15), %.1f s;", worst,
                ratio, secs) +
                table};
}

Outcome criterion_8()
{
    const ScenarioConfig c = load_scenario(kScenarios / "fig5_samplepath_pd1.json");
    RunOptions opt;
    opt.trace = true;
    opt.measure_runtime = false;
    const auto m = run(validate(c), opt);
    int equal = 0;
    std::string table;
    for (std::size_t i = 0; i < m.traces.size(); ++i) {
        const auto d = drop_alignment(m.traces[i]);
        equal += d.equal;
        table += fmt("\n    stream %zu: true drops %zu, estimated drops %zu, common %zu", i + 1, d.true_drops,
                     d.estimated_drops, d.common);
    }
    return {equal == static_cast<int>(m.traces.size()),
            fmt("%d of %zu streams have identical drop sets over T=%lld", equal, m.traces.size(),
                static_cast<long long>(c.horizon)) +
                table};
}

/// Enumerates the generation patterns of the rate-based model on (tau_pre_bar, t]:
/// per-slot rate eta_d on (tau_pre_bar, tau_cur] conditioned on at least one
/// generation, none on (tau_cur, tau_cur_bar], per-slot rate eta_u on (tau_cur_bar, t].
void brute_force_rate_model(double lambda, Slot tpb, Slot tc, Slot tcb, Slot t, std::vector<double>& last_u,
                            std::vector<double>& last_d)
{
    const auto eta = [&](Slot len) { return lambda / (1.0 - std::pow(1.0 - lambda, static_cast<double>(len))); };
    const double ed = eta(tc - tpb);
    const double eu = t > tcb ? eta(t - tcb) : 0.0;
    const int w = static_cast<int>(t - tpb);
    last_u.assign(static_cast<std::size_t>(w), 0.0);
    last_d.assign(static_cast<std::size_t>(w), 0.0);
    double total = 0.0;
    for (unsigned mask = 0; mask < (1u << w); ++mask) {
        double p = 1.0;
        int ld = -1, lu = -1;
        for (int k = 0; k < w; ++k) {
            const Slot slot = tpb + 1 + k;
            const bool g = (mask >> k) & 1u;
            const double rate = slot <= tc ? ed : (slot <= tcb ? 0.0 : eu);
            p *= g ? rate : 1.0 - rate;
            if (g) {
                lu = k;
                if (slot <= tc)
                    ld = k;
            }
        }
        if (ld < 0 || p == 0.0)
            continue;
        total += p;
        last_u[static_cast<std::size_t>(lu)] += p;
        last_d[static_cast<std::size_t>(ld)] += p;
    }
    for (double& x : last_u)
        x /= total;
    for (double& x : last_d)
        x /= total;
}

Outcome criterion_9()
{
    const ObservationState s{0, 0, 2, 2, 1};
    const double lambda = 0.5;
    const double pinned[] = {1.0 / 36, 1.0 / 12, 2.0 / 9, 2.0 / 3};
    std::vector<double> bu, bd;
    brute_force_rate_model(lambda, 0, 2, 2, 4, bu, bd);

    double err = 0.0;
    double confirm = 0.0;
    double bu_mean = 0.0, bd_mean = 0.0;
    for (Slot phi = 1; phi <= 4; ++phi) {
        const auto k = static_cast<std::size_t>(phi - 1);
        err = std::max(err, std::abs(q_u(s, lambda, 4, phi) - pinned[k]));
        confirm = std::max(confirm, std::abs(bu[k] - pinned[k]));
        bu_mean += static_cast<double>(phi) * bu[k];
        bd_mean += static_cast<double>(phi) * bd[k];
    }
    const auto ts = estimate_timestamps(s, lambda, 4);
    const auto direct = estimate_timestamps_direct(s, lambda, 4);
    err = std::max({err, std::abs(ts.gamma_u_hat - 127.0 / 36.0), std::abs(direct.gamma_u_hat - 127.0 / 36.0),
                    std::abs(ts.gamma_d_cur_hat - 1.75), std::abs(direct.gamma_d_cur_hat - 1.75)});
    confirm = std::max({confirm, std::abs(bu_mean - 127.0 / 36.0), std::abs(bd_mean - 1.75)});

    EstimatorState prior;
    prior.gamma_d_hat = 1.0;
    prior.gamma_d_cur_hat = ts.gamma_d_cur_hat;
    const double gd = update_destination(prior, true, 0.8).gamma_d_hat;
    err = std::max(err, std::abs(gd - 1.6));

    const auto exact = exact_posterior_current(s, InterGenerationPmf::geometric(lambda), 4);
    return {err <= 1e-12 && confirm <= 1e-12,
            fmt("max error vs pinned values %.3g, brute-force enumeration of the rate-based model agrees to %.3g "
                "(q_u = [%.12g, %.12g, %.12g, %.12g], gamma_u = %.12g, gamma_d_cur = %.12g, gamma_d = %.12g); exact "
                "Bernoulli posterior for reference: q_u = [%.6g, %.6g, %.6g, %.6g], mean %.6g",
                err, confirm, bu[0], bu[1], bu[2], bu[3], bu_mean, bd_mean, gd, exact.u.mass[0], exact.u.mass[1],
                exact.u.mass[2], exact.u.mass[3], exact.u.mean)};
}

const std::vector<std::function<Outcome()>> kCriteria{criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
                                                      criterion_6, criterion_7, criterion_8, criterion_9};

} // namespace

int main(int argc, char** argv)
{
    std::vector<int> selected;
    for (int k = 1; k < argc; ++k) {
        if (std::strcmp(argv[k], "--criterion") == 0 && k + 1 < argc) {
            const std::string v = argv[++k];
            if (v != "all")
                selected.push_back(std::stoi(v));
        } else {
            std::fprintf(stderr, "usage: acceptance [--criterion N|all]\n");
            return 2;
        }
    }
    if (selected.empty())
        for (int c = 1; c <= static_cast<int>(kCriteria.size()); ++c)
            selected.push_back(c);

    int failures = 0;
    for (int c : selected) {
        if (c < 1 || c > static_cast<int>(kCriteria.size())) {
            std::fprintf(stderr, "unknown criterion %d\n", c);
            return 2;
        }
        Outcome o;
        try {
            o = kCriteria[static_cast<std::size_t>(c - 1)]();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        std::printf("criterion %d: %s: %s\n", c, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        failures += !o.pass;
    }
    return failures == 0 ? 0 : 1;
}
