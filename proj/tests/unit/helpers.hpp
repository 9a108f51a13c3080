#pragma once

#include "aoisched/scenario.hpp"

namespace aoisched::test {

inline StreamConfig bernoulli_stream(StreamId id, double lambda, double p_u, double p_dest, Slot theta,
                                     double alpha = 1.0)
{
    StreamConfig s;
    s.params = {id, lambda, p_dest, theta, alpha, alpha};
    s.traffic = BernoulliTraffic{lambda};
    s.channel = ConstantChannel{p_u};
    return s;
}

inline ScenarioConfig small_scenario(int n = 3, int k = 1, Slot horizon = 200, Policy policy = Policy::mw_lc)
{
    ScenarioConfig c;
    c.n_streams = n;
    c.k_budget = k;
    c.horizon = horizon;
    c.seed = 7;
    c.policy = policy;
    for (int i = 1; i <= n; ++i)
        c.streams.push_back(bernoulli_stream(i, 0.2 + 0.1 * (i % 3), 0.5 + 0.1 * (i % 4), 0.8, i % 3, i));
    return c;
}

} // namespace aoisched::test
