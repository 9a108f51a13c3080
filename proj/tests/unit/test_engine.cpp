#include "aoisched/engine.hpp"
#include "aoisched/study.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

using namespace aoisched;
using aoisched::test::bernoulli_stream;
using aoisched::test::small_scenario;

namespace {

RunOptions traced()
{
    RunOptions o;
    o.trace = true;
    o.measure_runtime = false;
    return o;
}

/// A(1) = 1; A(t+1) = a(t-theta) + theta + 1 on a delivery of the packet sent at
/// t - theta, else A(t) + 1.
std::vector<Slot> replay_aoi(const StreamTrace& tr, Slot theta)
{
    const std::size_t T = tr.A.size();
    std::vector<Slot> A(T);
    A[0] = 1;
    for (std::size_t k = 0; k + 1 < T; ++k) {
        const Slot t = static_cast<Slot>(k + 1);
        const Slot sent = t - theta;
        const bool delivered = sent >= 1 && tr.served[static_cast<std::size_t>(sent - 1)] &&
                               tr.c_d[static_cast<std::size_t>(sent - 1)];
        A[k + 1] = delivered ? tr.a[static_cast<std::size_t>(sent - 1)] + theta + 1 : A[k] + 1;
    }
    return A;
}

} // namespace

TEST_CASE("metric helpers")
{
    const std::vector<std::vector<Slot>> aoi{{1, 2, 3}, {2, 2, 2}};
    const std::vector<double> alpha{1.0, 3.0};
    CHECK(ewsaoi(aoi, alpha) == doctest::Approx((6.0 + 18.0) / 6.0));

    CHECK(nmse(std::vector<double>{1.0, 2.0}, std::vector<Slot>{1, 2}) == 0.0);
    CHECK(nmse(std::vector<double>{2.0, 2.0}, std::vector<Slot>{1, 3}) == doctest::Approx(2.0 / 10.0));
    CHECK_THROWS_AS(nmse(std::vector<double>{1.0}, std::vector<Slot>{1, 2}), ContractViolation);

    const auto cdf = aoi_cdf(std::vector<double>{3.0, 1.0, 3.0, 2.0});
    REQUIRE(cdf.size() == 3);
    CHECK(cdf[0] == std::pair<double, double>{1.0, 0.25});
    CHECK(cdf[1] == std::pair<double, double>{2.0, 0.5});
    CHECK(cdf[2] == std::pair<double, double>{3.0, 1.0});

    const auto sp = sample_path(std::vector<double>{5, 6, 7, 8, 9}, 2);
    CHECK(sp == std::vector<std::pair<Slot, double>>{{1, 5}, {3, 7}, {5, 9}});
    CHECK_THROWS_AS(sample_path(std::vector<double>{1.0}, 0), ContractViolation);

    CHECK(drop_instants(std::span<const Slot>(std::vector<Slot>{1, 2, 1, 2, 3, 0})) == std::vector<Slot>{3, 6});
}

TEST_CASE("lossless network with full budget keeps AoI at one")
{
    ScenarioConfig c;
    c.n_streams = 3;
    c.k_budget = 3;
    c.horizon = 500;
    for (int i = 1; i <= 3; ++i)
        c.streams.push_back(bernoulli_stream(i, 1.0, 1.0, 1.0, 0, i));
    const auto m = run(validate(c), traced());
    CHECK(m.ewsaoi == doctest::Approx(1.0 * (1 + 2 + 3) / 3.0));
    for (const auto& tr : m.traces)
        for (Slot A : tr.A)
            CHECK(A == 1);
    CHECK(m.deliveries == 1500);
}

TEST_CASE("a dead uplink gives AoI t at slot t")
{
    ScenarioConfig c;
    c.n_streams = 2;
    c.k_budget = 1;
    c.horizon = 1000;
    c.streams.push_back(bernoulli_stream(1, 0.5, 0.0, 0.8, 2, 2.0));
    c.streams.push_back(bernoulli_stream(2, 0.5, 0.0, 0.8, 2, 4.0));
    for (Policy p : {Policy::mw_lc, Policy::rr, Policy::pf, Policy::mw_enf}) {
        c.policy = p;
        const auto m = run(validate(c));
        CHECK(m.ewsaoi == doctest::Approx((1000.0 + 1) / 2 * 3.0));
        CHECK(m.deliveries == 0);
    }
}

TEST_CASE("pipeline AoI equals the literal recursion")
{
    RandomStream rng(44);
    for (int k = 0; k < 30; ++k) {
        const int n = static_cast<int>(rng.uniform_int(1, 5));
        ScenarioConfig c;
        c.n_streams = n;
        c.k_budget = static_cast<int>(rng.uniform_int(1, n));
        c.horizon = 1000;
        c.seed = rng.uniform_int(1, 1000);
        c.policy = static_cast<Policy>(rng.uniform_int(0, 5));
        for (int i = 1; i <= n; ++i) {
            auto s = bernoulli_stream(i, 0.05 + 0.95 * rng.uniform(), 0.1 + 0.9 * rng.uniform(),
                                      0.1 + 0.9 * rng.uniform(), rng.uniform_int(0, 10));
            s.channel = FrameIidUniformChannel{0.1, 1.0};
            c.streams.push_back(s);
        }
        const auto m = run(validate(c), traced());
        for (int i = 0; i < n; ++i) {
            const auto& tr = m.traces[static_cast<std::size_t>(i)];
            CHECK(replay_aoi(tr, c.streams[static_cast<std::size_t>(i)].params.theta) == tr.A);
        }
    }
}

TEST_CASE("runs are deterministic and policies share channel draws")
{
    const auto c = small_scenario(4, 2, 400, Policy::mw_lc);
    RunOptions o = traced();
    o.events = true;
    const auto a = run(validate(c), o);
    const auto b = run(validate(c), o);
    CHECK(a.ewsaoi == b.ewsaoi);
    CHECK(a.events == b.events);
    CHECK(a.weighted_sum == b.weighted_sum);

    auto rr = c;
    rr.policy = Policy::rr;
    const auto r = run(validate(rr), traced());
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(r.traces[i].g == a.traces[i].g);
        CHECK(r.traces[i].p_u == a.traces[i].p_u);
    }
}

TEST_CASE("report bookkeeping")
{
    const auto c = small_scenario(3, 1, 300, Policy::pf);
    RunOptions o = traced();
    o.events = true;
    o.trace_stride = 7;
    const auto m = run(validate(c), o);
    CHECK(m.policy == "pf");
    CHECK(m.estimator == "lc");
    CHECK(m.weighted_sum.size() == 300);
    CHECK(m.traces[0].A.size() == 43);
    CHECK(m.grants == m.events.size());
    CHECK(m.grants <= 300);
    CHECK(m.ul_successes >= m.deliveries);
    const double mean_ws = std::accumulate(m.weighted_sum.begin(), m.weighted_sum.end(), 0.0) / 300.0;
    CHECK(m.ewsaoi == doctest::Approx(mean_ws / 3.0));
    for (const auto& e : m.events)
        CHECK(e.packet_id.has_value() == e.c_u);
}

TEST_CASE("seed fuzz: every policy runs and metrics are finite")
{
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        for (Policy p : {Policy::mw_lc, Policy::mw_ltr, Policy::mw_enf, Policy::rr, Policy::pf, Policy::random}) {
            auto c = small_scenario(4, 2, 300, p);
            c.seed = seed;
            c.streams[1].traffic = UniformIntegerTraffic{2, 6};
            c.streams[1].params.lambda = 0.25;
            const auto m = run(validate(c));
            CHECK(std::isfinite(m.ewsaoi));
            CHECK(std::isfinite(m.nmse_mean));
            CHECK(m.ewsaoi >= 1.0);
        }
    }
}

TEST_CASE("empirical channel coverage is checked before the run")
{
    auto c = small_scenario(2, 1, 30);
    const auto dir = std::filesystem::temp_directory_path() / "aoisched_engine_test.csv";
    {
        std::ofstream out(dir);
        out << "stream_id,frame_index,p_u\n1,1,0.5\n2,1,0.5\n1,2,0.5\n2,2,0.5\n1,3,0.5\n2,3,0.5\n";
    }
    auto table = std::make_shared<const ChannelTable>(ChannelTable::load_csv(dir));
    for (auto& s : c.streams)
        s.channel = EmpiricalChannel{table, dir};
    CHECK_NOTHROW(validate(c));
    c.horizon = 31;
    CHECK_THROWS_AS(validate(c), ValidationError);
    std::filesystem::remove(dir);
}

TEST_CASE("bench helpers")
{
    const std::vector<int> ns{2, 4};
    const std::vector<std::string> pipes{"mw_lc", "noop"};
    const auto rows = bench_runtime(ns, 1, pipes, std::nullopt, 50);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].pipeline == "mw_lc");
    CHECK(rows[3].n_streams == 4);
    for (const auto& r : rows)
        CHECK(r.runtime.mean_us >= 0.0);
    const auto c = bench_scenario(7, Policy::mw_lc, 10, 1);
    CHECK(c.k_budget == 2);
    CHECK_NOTHROW(validate(c));
}

TEST_CASE("drop alignment and sweeps")
{
    StreamTrace tr;
    tr.A = {1, 2, 1, 2, 3, 1};
    tr.A_hat = {1, 2, 1.5, 2.5, 3.5, 4.5};
    const auto d = drop_alignment(tr);
    CHECK(d.true_drops == 2);
    CHECK(d.estimated_drops == 1);
    CHECK(d.common == 1);
    CHECK_FALSE(d.equal);

    SweepSpec spec;
    spec.base = small_scenario(3, 1, 200);
    spec.param = SweepParam::mean_interval;
    spec.values = {2, 5};
    spec.policies = {Policy::mw_lc, Policy::rr};
    spec.seeds = {1, 2, 3};
    spec.traffic_kinds = {"periodic", "bernoulli"};
    const auto rows = run_sweep(spec, 2);
    REQUIRE(rows.size() == 8);
    CHECK(rows[0].traffic_kind == "bernoulli");
    CHECK(rows[0].policy == Policy::mw_lc);
    CHECK(rows[1].policy == Policy::rr);
    CHECK(rows.back().traffic_kind == "periodic");
    CHECK(rows.back().value == 5.0);
    for (const auto& r : rows) {
        CHECK(r.n_seeds == 3);
        CHECK(r.std_ewsaoi >= 0.0);
    }
    const auto again = run_sweep(spec, 1);
    for (std::size_t k = 0; k < rows.size(); ++k)
        CHECK(again[k].mean_ewsaoi == rows[k].mean_ewsaoi);

    spec.values = {2.5};
    CHECK_THROWS_AS(run_sweep(spec, 1), ValidationError);
}
