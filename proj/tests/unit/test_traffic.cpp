#include "aoisched/traffic.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace aoisched;

namespace {

std::vector<Slot> generation_slots(const GenerationModel& m, Slot horizon, std::uint64_t seed)
{
    SourceQueue q;
    RandomStream rng(seed);
    std::vector<Slot> out;
    for (Slot t = 1; t <= horizon; ++t) {
        if (step_generation(m, q, t, rng))
            out.push_back(t);
    }
    return out;
}

} // namespace

TEST_CASE("periodic traffic fires at 1, 1+P, 1+2P")
{
    CHECK(generation_slots(PeriodicTraffic{4}, 13, 1) == std::vector<Slot>{1, 5, 9, 13});
    CHECK(generation_slots(PeriodicTraffic{1}, 4, 1) == std::vector<Slot>{1, 2, 3, 4});
}

TEST_CASE("Bernoulli traffic with lambda = 1 fires every slot")
{
    CHECK(generation_slots(BernoulliTraffic{1.0}, 50, 3).size() == 50);
}

TEST_CASE("slot 1 always generates")
{
    for (std::uint64_t s = 0; s < 20; ++s) {
        CHECK(generation_slots(BernoulliTraffic{0.01}, 1, s) == std::vector<Slot>{1});
        CHECK(generation_slots(UniformIntegerTraffic{4, 8}, 1, s) == std::vector<Slot>{1});
    }
}

TEST_CASE("uniform_integer intervals stay in bounds with mean 6")
{
    const auto slots = generation_slots(UniformIntegerTraffic{4, 8}, 1'000'000, 17);
    double sum = 0.0;
    for (std::size_t k = 1; k < slots.size(); ++k) {
        const Slot gap = slots[k] - slots[k - 1];
        REQUIRE(gap >= 4);
        REQUIRE(gap <= 8);
        sum += static_cast<double>(gap);
    }
    CHECK(std::abs(sum / static_cast<double>(slots.size() - 1) - 6.0) < 0.01);
}

TEST_CASE("Bernoulli rate within three standard errors")
{
    const double lambda = 0.3;
    const Slot T = 200'000;
    const auto slots = generation_slots(BernoulliTraffic{lambda}, T, 5);
    const double rate = static_cast<double>(slots.size() - 1) / static_cast<double>(T - 1);
    const double se = std::sqrt(lambda * (1 - lambda) / static_cast<double>(T - 1));
    CHECK(std::abs(rate - lambda) < 3 * se);
}

TEST_CASE("system time follows the source recursion and ids increase")
{
    const GenerationModel m = UniformIntegerTraffic{2, 5};
    SourceQueue q;
    RandomStream rng(9);
    Slot a = 0;
    std::uint64_t last_id = 0;
    for (Slot t = 1; t <= 500; ++t) {
        const int g = step_generation(m, q, t, rng);
        a = g ? 0 : a + 1;
        CHECK(system_time(q, t) == a);
        CHECK(q.packet_id >= last_id);
        CHECK(q.packet_id == last_id + static_cast<std::uint64_t>(g));
        last_id = q.packet_id;
    }
    CHECK_THROWS_AS(system_time(SourceQueue{}, 3), ContractViolation);
    CHECK_THROWS_AS(step_generation(m, q, 0, rng), ContractViolation);
}

TEST_CASE("mean interval and kind conversions")
{
    CHECK(mean_interval(BernoulliTraffic{0.25}) == 4.0);
    CHECK(mean_interval(PeriodicTraffic{7}) == 7.0);
    CHECK(mean_interval(UniformIntegerTraffic{4, 8}) == 6.0);
    CHECK(effective_rate(UniformIntegerTraffic{4, 8}) == doctest::Approx(1.0 / 6.0));

    CHECK(with_mean_interval(BernoulliTraffic{0.5}, 8.0) == GenerationModel{BernoulliTraffic{0.125}});
    CHECK(with_mean_interval(PeriodicTraffic{3}, 6.0) == GenerationModel{PeriodicTraffic{6}});
    CHECK(with_mean_interval(UniformIntegerTraffic{4, 8}, 9.0) == GenerationModel{UniformIntegerTraffic{6, 12}});
    CHECK(with_mean_interval(UniformIntegerTraffic{4, 8}, 2.0) == GenerationModel{UniformIntegerTraffic{1, 3}});
    CHECK_THROWS_AS(with_mean_interval(PeriodicTraffic{3}, 2.5), ValidationError);
    CHECK_THROWS_AS(with_mean_interval(BernoulliTraffic{0.5}, 0.5), ValidationError);

    CHECK(with_kind(BernoulliTraffic{0.25}, "periodic") == GenerationModel{PeriodicTraffic{4}});
    CHECK(mean_interval(with_kind(PeriodicTraffic{10}, "uniform_integer")) == 10.0);
    CHECK(kind_name(with_kind(PeriodicTraffic{10}, "bernoulli")) == "bernoulli");
    CHECK_THROWS_AS(with_kind(PeriodicTraffic{10}, "poisson"), ValidationError);
}

TEST_CASE("generation model checks")
{
    CHECK_NOTHROW(check_generation_model(BernoulliTraffic{1.0}, 1));
    CHECK_THROWS_WITH_AS(check_generation_model(BernoulliTraffic{0.0}, 2), "stream 2: traffic lambda out of range",
                         ValidationError);
    CHECK_THROWS_AS(check_generation_model(UniformIntegerTraffic{5, 4}, 1), ValidationError);
    CHECK_THROWS_AS(check_generation_model(UniformIntegerTraffic{0, 4}, 1), ValidationError);
}
