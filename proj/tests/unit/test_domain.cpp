#include "aoisched/scenario.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>

using namespace aoisched;
using aoisched::test::small_scenario;

TEST_CASE("frame index is 1-based and constant within a frame")
{
    CHECK(frame_index(1, 10) == 1);
    CHECK(frame_index(10, 10) == 1);
    CHECK(frame_index(11, 10) == 2);
    CHECK(frame_index(7, 1) == 7);
}

TEST_CASE("stream parameter checks name the field")
{
    StreamParams p{4, 0.5, 0.8, 2, 1.0, 1.0};
    CHECK_NOTHROW(check_stream_params(p));
    auto bad = p;
    bad.lambda = 0.0;
    CHECK_THROWS_WITH_AS(check_stream_params(bad), "stream 4: lambda out of range", ValidationError);
    bad = p;
    bad.lambda = 1.5;
    CHECK_THROWS_AS(check_stream_params(bad), ValidationError);
    bad = p;
    bad.p_dest = 0.0;
    CHECK_THROWS_WITH_AS(check_stream_params(bad), "stream 4: p_dest out of range", ValidationError);
    bad = p;
    bad.theta = -1;
    CHECK_THROWS_WITH_AS(check_stream_params(bad), "stream 4: theta out of range", ValidationError);
    bad = p;
    bad.alpha = -2.0;
    CHECK_THROWS_WITH_AS(check_stream_params(bad), "stream 4: alpha out of range", ValidationError);
    bad = p;
    bad.beta = 0.0;
    CHECK_THROWS_WITH_AS(check_stream_params(bad), "stream 4: beta out of range", ValidationError);
}

TEST_CASE("scenario validation: accepted configurations are unchanged")
{
    const auto c = small_scenario();
    const auto v = validate(c);
    CHECK(v.config() == c);
    CHECK(v.estimator() == EstimatorKind::lc);
    CHECK(validate(v) == v);
}

TEST_CASE("scenario validation: network-level errors")
{
    auto c = small_scenario(3, 1);
    c.k_budget = 0;
    CHECK_THROWS_WITH_AS(validate(c), "k_budget out of range", ValidationError);
    c.k_budget = 4;
    CHECK_THROWS_WITH_AS(validate(c), "k_budget out of range", ValidationError);

    c = small_scenario();
    c.horizon = 0;
    CHECK_THROWS_AS(validate(c), ValidationError);

    c = small_scenario();
    c.frame_len = 0;
    CHECK_THROWS_AS(validate(c), ValidationError);

    c = small_scenario();
    c.n_streams = 0;
    c.streams.clear();
    CHECK_THROWS_AS(validate(c), ValidationError);

    c = small_scenario();
    c.streams.pop_back();
    CHECK_THROWS_AS(validate(c), ValidationError);

    c = small_scenario();
    c.pf_time_constant = 0.5;
    CHECK_THROWS_AS(validate(c), ValidationError);
}

TEST_CASE("scenario validation: stream-level errors")
{
    auto c = small_scenario();
    c.streams[2].params.id = 1;
    CHECK_THROWS_WITH_AS(validate(c), "stream 1: duplicate id", ValidationError);

    c = small_scenario();
    c.streams[2].params.id = 9;
    CHECK_THROWS_WITH_AS(validate(c), "stream 9: id out of range", ValidationError);

    c = small_scenario();
    c.streams[1].params.lambda = 0.9;
    CHECK_THROWS_WITH_AS(validate(c), "stream 2: lambda does not match traffic rate", ValidationError);

    c = small_scenario();
    c.streams[0].channel = ConstantChannel{1.2};
    CHECK_THROWS_AS(validate(c), ValidationError);

    c = small_scenario();
    c.streams[0].traffic = PeriodicTraffic{0};
    CHECK_THROWS_AS(validate(c), ValidationError);
}

TEST_CASE("scenario validation sorts streams by id")
{
    auto c = small_scenario(4, 2);
    std::reverse(c.streams.begin(), c.streams.end());
    const auto v = validate(c);
    for (int i = 0; i < 4; ++i)
        CHECK(v.config().streams[static_cast<std::size_t>(i)].params.id == i + 1);
    CHECK(validate(v.config()) == v);
}

TEST_CASE("estimator resolution")
{
    CHECK(resolve_estimator(Policy::mw_lc, std::nullopt) == EstimatorKind::lc);
    CHECK(resolve_estimator(Policy::mw_ltr, std::nullopt) == EstimatorKind::lc);
    CHECK(resolve_estimator(Policy::mw_enf, std::nullopt) == EstimatorKind::oracle);
    CHECK(resolve_estimator(Policy::rr, std::nullopt) == EstimatorKind::lc);
    CHECK(resolve_estimator(Policy::pf, EstimatorKind::oracle) == EstimatorKind::oracle);
    CHECK_THROWS_AS(resolve_estimator(Policy::mw_lc, EstimatorKind::oracle), ValidationError);
    CHECK_THROWS_AS(resolve_estimator(Policy::mw_enf, EstimatorKind::lc), ValidationError);
    CHECK(parse_estimator("oracle") == EstimatorKind::oracle);
    CHECK(estimator_name(EstimatorKind::lc) == "lc");
    CHECK_THROWS_AS(parse_estimator("kalman"), ValidationError);
}
