#pragma once

#include "aoisched/channel.hpp"
#include "aoisched/domain.hpp"
#include "aoisched/estimator_oracle.hpp"
#include "aoisched/scheduling.hpp"
#include "aoisched/traffic.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace aoisched {

enum class EstimatorKind { lc, oracle };

std::string estimator_name(EstimatorKind kind);
EstimatorKind parse_estimator(const std::string& name);

struct StreamConfig {
    StreamParams params;
    GenerationModel traffic = BernoulliTraffic{1.0};
    UplinkChannelModel channel = ConstantChannel{1.0};
    /// Prior used by the oracle estimator; derived from `traffic` when absent.
    std::optional<InterGenerationPmf> pmf;

    bool operator==(const StreamConfig&) const = default;
};

struct ScenarioConfig {
    std::string description;
    int n_streams = 1;
    int k_budget = 1;
    Slot horizon = 1;
    std::uint64_t seed = 1;
    Slot frame_len = kDefaultFrameLength;
    Policy policy = Policy::mw_lc;
    /// Estimator tracked by non-Max-Weight policies; Max-Weight policies fix their own.
    std::optional<EstimatorKind> estimator;
    double pf_time_constant = 100.0;
    std::vector<StreamConfig> streams;

    bool operator==(const ScenarioConfig&) const = default;
};

/// A scenario whose invariants have been checked. Streams are sorted by id.
class ValidatedScenario {
public:
    const ScenarioConfig& config() const noexcept { return config_; }
    EstimatorKind estimator() const noexcept { return estimator_; }
    /// Oracle prior of stream index i (0-based).
    const InterGenerationPmf& pmf(std::size_t i) const { return pmfs_.at(i); }

    bool operator==(const ValidatedScenario&) const = default;

private:
    friend ValidatedScenario validate(const ScenarioConfig& config);
    ScenarioConfig config_;
    EstimatorKind estimator_ = EstimatorKind::lc;
    std::vector<InterGenerationPmf> pmfs_;
};

/// Checks every invariant and throws ValidationError naming the first violated
/// one. Numeric values are never altered.
ValidatedScenario validate(const ScenarioConfig& config);
inline ValidatedScenario validate(const ValidatedScenario& scenario) { return validate(scenario.config()); }

/// Estimator implied by the policy and the optional explicit choice.
EstimatorKind resolve_estimator(Policy policy, std::optional<EstimatorKind> requested);

} // namespace aoisched
