#include "aoisched/traffic.hpp"

#include <cmath>
#include <string>

namespace aoisched {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

std::string stream_prefix(StreamId id) { return "stream " + std::to_string(id) + ": "; }

Slot require_integer_mean(double mean, const char* kind)
{
    const double rounded = std::round(mean);
    if (std::abs(mean - rounded) > 1e-9 || rounded < 1)
        throw ValidationError(std::string("mean_interval must be a positive integer for ") + kind);
    return static_cast<Slot>(rounded);
}

} // namespace

void check_stream_params(const StreamParams& p)
{
    const auto fail = [&](const char* what) { throw ValidationError(stream_prefix(p.id) + what); };
    if (!(p.lambda > 0.0 && p.lambda <= 1.0))
        fail("lambda out of range");
    if (!(p.p_dest > 0.0 && p.p_dest <= 1.0))
        fail("p_dest out of range");
    if (p.theta < 0)
        fail("theta out of range");
    if (!(p.alpha > 0.0) || !std::isfinite(p.alpha))
        fail("alpha out of range");
    if (!(p.beta > 0.0) || !std::isfinite(p.beta))
        fail("beta out of range");
}

double mean_interval(const GenerationModel& model)
{
    return std::visit(overloaded{
                          [](const BernoulliTraffic& m) { return 1.0 / m.lambda; },
                          [](const PeriodicTraffic& m) { return static_cast<double>(m.period); },
                          [](const UniformIntegerTraffic& m) { return 0.5 * static_cast<double>(m.lo + m.hi); },
                      },
                      model);
}

std::string kind_name(const GenerationModel& model)
{
    return std::visit(overloaded{
                          [](const BernoulliTraffic&) { return std::string("bernoulli"); },
                          [](const PeriodicTraffic&) { return std::string("periodic"); },
                          [](const UniformIntegerTraffic&) { return std::string("uniform_integer"); },
                      },
                      model);
}

void check_generation_model(const GenerationModel& model, StreamId id)
{
    std::visit(overloaded{
                   [&](const BernoulliTraffic& m) {
                       if (!(m.lambda > 0.0 && m.lambda <= 1.0))
                           throw ValidationError(stream_prefix(id) + "traffic lambda out of range");
                   },
                   [&](const PeriodicTraffic& m) {
                       if (m.period < 1)
                           throw ValidationError(stream_prefix(id) + "traffic period out of range");
                   },
                   [&](const UniformIntegerTraffic& m) {
                       if (m.lo < 1 || m.hi < m.lo)
                           throw ValidationError(stream_prefix(id) + "traffic bounds out of range");
                   },
               },
               model);
}

GenerationModel with_mean_interval(const GenerationModel& model, double mean)
{
    if (!(mean >= 1.0))
        throw ValidationError("mean_interval out of range");
    return std::visit(overloaded{
                          [&](const BernoulliTraffic&) -> GenerationModel { return BernoulliTraffic{1.0 / mean}; },
                          [&](const PeriodicTraffic&) -> GenerationModel {
                              return PeriodicTraffic{require_integer_mean(mean, "periodic")};
                          },
                          [&](const UniformIntegerTraffic& m) -> GenerationModel {
                              const Slot centre = require_integer_mean(mean, "uniform_integer");
                              const double rel = static_cast<double>(m.hi - m.lo) / static_cast<double>(m.hi + m.lo);
                              Slot half = static_cast<Slot>(std::llround(rel * static_cast<double>(centre)));
                              if (half > centre - 1)
                                  half = centre - 1;
                              return UniformIntegerTraffic{centre - half, centre + half};
                          },
                      },
                      model);
}

GenerationModel with_kind(const GenerationModel& model, const std::string& kind)
{
    const double mean = mean_interval(model);
    if (kind == "bernoulli")
        return BernoulliTraffic{1.0 / mean};
    if (kind == "periodic")
        return PeriodicTraffic{require_integer_mean(mean, "periodic")};
    if (kind == "uniform_integer") {
        // Width used when converting from a kind that has none: +-1/3 of the mean.
        const GenerationModel shaped = std::holds_alternative<UniformIntegerTraffic>(model)
                                           ? model
                                           : GenerationModel{UniformIntegerTraffic{4, 8}};
        return with_mean_interval(shaped, mean);
    }
    throw ValidationError("unknown traffic kind '" + kind + "'");
}

int step_generation(const GenerationModel& model, SourceQueue& queue, Slot t, RandomStream& rng)
{
    if (t < 1)
        throw ContractViolation("step_generation requires t >= 1");

    bool fire = false;
    if (t == 1) {
        fire = true;
    } else {
        fire = std::visit(overloaded{
                              [&](const BernoulliTraffic& m) { return rng.bernoulli(m.lambda); },
                              [&](const PeriodicTraffic&) { return t == queue.next_generation; },
                              [&](const UniformIntegerTraffic&) { return t == queue.next_generation; },
                          },
                          model);
    }
    if (!fire)
        return 0;

    queue.gen_time = t;
    ++queue.packet_id;
    queue.has_packet = true;
    std::visit(overloaded{
                   [](const BernoulliTraffic&) {},
                   [&](const PeriodicTraffic& m) { queue.next_generation = t + m.period; },
                   [&](const UniformIntegerTraffic& m) { queue.next_generation = t + rng.uniform_int(m.lo, m.hi); },
               },
               model);
    return 1;
}

Slot system_time(const SourceQueue& queue, Slot t)
{
    if (!queue.has_packet)
        throw ContractViolation("system_time queried on an empty queue");
    return t - queue.gen_time;
}

} // namespace aoisched
