#pragma once

#include "aoisched/domain.hpp"
#include "aoisched/random.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <unordered_map>
#include <variant>
#include <vector>

namespace aoisched {

struct ConstantChannel {
    double p = 1.0;
    bool operator==(const ConstantChannel&) const = default;
};

/// Reliability redrawn uniformly on [p_min, p_max] at every frame.
struct FrameIidUniformChannel {
    double p_min = 0.0;
    double p_max = 1.0;
    bool operator==(const FrameIidUniformChannel&) const = default;
};

/// Reliability redrawn from a discrete distribution at every frame.
struct FrameIidDiscreteChannel {
    std::vector<double> support;
    std::vector<double> mass;
    bool operator==(const FrameIidDiscreteChannel&) const = default;
};

/// Per-stream, per-frame reliabilities replayed from a measured table.
class ChannelTable {
public:
    /// Reads CSV with header `stream_id,frame_index,p_u`. Frames are 1-based.
    static ChannelTable load_csv(const std::filesystem::path& path);

    void set(StreamId stream, Slot frame, double p_u);

    /// Throws ValidationError("channel table exhausted") when the frame is missing.
    double at(StreamId stream, Slot frame) const;

    bool covers(StreamId stream, Slot last_frame) const;
    double mean(StreamId stream) const;

private:
    std::unordered_map<StreamId, std::vector<double>> rows_;
};

struct EmpiricalChannel {
    std::shared_ptr<const ChannelTable> table;
    std::filesystem::path source;
    bool operator==(const EmpiricalChannel&) const = default;
};

using UplinkChannelModel =
    std::variant<ConstantChannel, FrameIidUniformChannel, FrameIidDiscreteChannel, EmpiricalChannel>;

void check_channel_model(const UplinkChannelModel& model, StreamId id);

/// p^U(t). Pure in (model, seed, stream, frame): constant within a frame.
double reliability(const UplinkChannelModel& model, StreamId stream, Slot t, Slot frame_len, std::uint64_t seed);

/// Long-run average reliability, used by policies that ignore per-frame CSI.
double mean_reliability(const UplinkChannelModel& model, StreamId stream);

/// c^U draw given a uniform variate in [0, 1).
inline bool realize_uplink(double p_u, double uniform) { return uniform < p_u; }
inline bool realize_uplink(double p_u, RandomStream& rng) { return realize_uplink(p_u, rng.uniform()); }

struct ForwardingEntry {
    StreamId stream = 0;
    Slot gen_time = 0;
    Slot send_slot = 0;
    Slot delivery_slot = 0;
    bool delivered = false;
};

struct Delivery {
    StreamId stream = 0;
    Slot gen_time = 0;

    bool operator==(const Delivery&) const = default;
};

/// In-flight packets between the gNB and the destinations. Delivery outcomes
/// are committed on enqueue and revealed at delivery_slot.
class ForwardingPipeline {
public:
    void enqueue(StreamId stream, Slot gen_time, Slot send_slot, double p_dest, Slot theta, double uniform);
    void enqueue(StreamId stream, Slot gen_time, Slot send_slot, double p_dest, Slot theta, RandomStream& rng)
    {
        enqueue(stream, gen_time, send_slot, p_dest, theta, rng.uniform());
    }

    /// Removes every entry due at or before t. Returns the successful ones,
    /// ordered by (delivery slot, stream id).
    std::vector<Delivery> drain_deliveries(Slot t);

    std::size_t in_flight() const noexcept { return size_; }
    std::uint64_t enqueued() const noexcept { return enqueued_; }
    std::uint64_t drained() const noexcept { return drained_; }

private:
    std::map<Slot, std::vector<ForwardingEntry>> by_slot_;
    std::size_t size_ = 0;
    std::uint64_t enqueued_ = 0;
    std::uint64_t drained_ = 0;
};

} // namespace aoisched
