#include "aoisched/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace aoisched {

std::string estimator_name(EstimatorKind kind)
{
    return kind == EstimatorKind::lc ? "lc" : "oracle";
}

EstimatorKind parse_estimator(const std::string& name)
{
    if (name == "lc")
        return EstimatorKind::lc;
    if (name == "oracle")
        return EstimatorKind::oracle;
    throw ValidationError("unknown estimator '" + name + "'");
}

EstimatorKind resolve_estimator(Policy policy, std::optional<EstimatorKind> requested)
{
    std::optional<EstimatorKind> fixed;
    if (policy == Policy::mw_lc || policy == Policy::mw_ltr)
        fixed = EstimatorKind::lc;
    else if (policy == Policy::mw_enf)
        fixed = EstimatorKind::oracle;
    if (fixed && requested && *fixed != *requested)
        throw ValidationError("estimator '" + estimator_name(*requested) + "' conflicts with policy '" +
                              policy_name(policy) + "'");
    return fixed.value_or(requested.value_or(EstimatorKind::lc));
}

ValidatedScenario validate(const ScenarioConfig& config)
{
    if (config.n_streams < 1)
        throw ValidationError("n_streams out of range");
    if (config.k_budget < 1 || config.k_budget > config.n_streams)
        throw ValidationError("k_budget out of range");
    if (config.horizon < 1)
        throw ValidationError("horizon out of range");
    if (config.frame_len < 1)
        throw ValidationError("frame_len out of range");
    if (!(config.pf_time_constant >= 1.0) || !std::isfinite(config.pf_time_constant))
        throw ValidationError("pf_time_constant out of range");
    if (config.streams.size() != static_cast<std::size_t>(config.n_streams))
        throw ValidationError("streams list has " + std::to_string(config.streams.size()) + " entries, expected " +
                              std::to_string(config.n_streams));

    ValidatedScenario out;
    out.config_ = config;
    auto& streams = out.config_.streams;
    std::stable_sort(streams.begin(), streams.end(),
                     [](const StreamConfig& a, const StreamConfig& b) { return a.params.id < b.params.id; });

    std::set<StreamId> seen;
    for (const StreamConfig& s : streams) {
        const StreamId id = s.params.id;
        if (!seen.insert(id).second)
            throw ValidationError("stream " + std::to_string(id) + ": duplicate id");
        if (id < 1 || id > config.n_streams)
            throw ValidationError("stream " + std::to_string(id) + ": id out of range");
        check_stream_params(s.params);
        check_generation_model(s.traffic, id);
        if (std::abs(effective_rate(s.traffic) - s.params.lambda) > 1e-9)
            throw ValidationError("stream " + std::to_string(id) + ": lambda does not match traffic rate");
        check_channel_model(s.channel, id);
        if (const auto* emp = std::get_if<EmpiricalChannel>(&s.channel)) {
            if (!emp->table->covers(id, frame_index(config.horizon, config.frame_len)))
                throw ValidationError("stream " + std::to_string(id) + ": channel table exhausted");
        }
        out.pmfs_.push_back(s.pmf ? *s.pmf : InterGenerationPmf::from_traffic(s.traffic));
    }
    out.estimator_ = resolve_estimator(config.policy, config.estimator);
    return out;
}

} // namespace aoisched
