#pragma once

#include "aoisched/domain.hpp"
#include "aoisched/random.hpp"

#include <cstdint>
#include <string>
#include <variant>

namespace aoisched {

struct BernoulliTraffic {
    double lambda = 1.0;
    bool operator==(const BernoulliTraffic&) const = default;
};

/// Generations at t = 1, 1+P, 1+2P, ...
struct PeriodicTraffic {
    Slot period = 1;
    bool operator==(const PeriodicTraffic&) const = default;
};

/// Inter-generation period drawn uniformly from {lo, ..., hi}.
struct UniformIntegerTraffic {
    Slot lo = 1;
    Slot hi = 1;
    bool operator==(const UniformIntegerTraffic&) const = default;
};

using GenerationModel = std::variant<BernoulliTraffic, PeriodicTraffic, UniformIntegerTraffic>;

double mean_interval(const GenerationModel& model);
inline double effective_rate(const GenerationModel& model) { return 1.0 / mean_interval(model); }
std::string kind_name(const GenerationModel& model);
void check_generation_model(const GenerationModel& model, StreamId id);

/// Rebuilds a model of the same kind with the requested mean inter-generation
/// period. Integer-period kinds require an integer mean; uniform_integer keeps
/// its relative half-width.
GenerationModel with_mean_interval(const GenerationModel& model, double mean);

/// Converts a model to `kind` ("bernoulli" | "periodic" | "uniform_integer")
/// keeping the mean inter-generation period.
GenerationModel with_kind(const GenerationModel& model, const std::string& kind);

/// Single-packet source buffer.
struct SourceQueue {
    Slot gen_time = 0;
    std::uint64_t packet_id = 0;
    bool has_packet = false;
    /// Renewal bookkeeping for periodic / uniform_integer models.
    Slot next_generation = 1;
};

/// Advances the renewal process to slot t. Returns 1 and replaces the stored
/// packet when a generation fires. Slot 1 always generates.
int step_generation(const GenerationModel& model, SourceQueue& queue, Slot t, RandomStream& rng);

/// a(t) = t - gen_time of the stored packet.
Slot system_time(const SourceQueue& queue, Slot t);

} // namespace aoisched
