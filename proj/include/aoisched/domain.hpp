#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace aoisched {

/// Slot index. Slot 1 is the first simulated slot; slot 0 is the virtual
/// pre-history anchor used by the estimators before any reception.
using Slot = std::int64_t;

/// 1-based stream index.
using StreamId = int;

inline constexpr Slot kDefaultFrameLength = 10;

/// Frame index ceil(t / F) for t >= 1; frames are 1-based.
constexpr Slot frame_index(Slot t, Slot frame_len) noexcept
{
    return (t + frame_len - 1) / frame_len;
}

/// Invariant violated by user-supplied configuration.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller broke an operation's precondition.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Static per-stream parameters visible to the gNB.
struct StreamParams {
    StreamId id = 1;
    double lambda = 1.0; ///< generation rate 1/E[X]
    double p_dest = 1.0; ///< forwarding reliability
    Slot theta = 0;      ///< forwarding delay in slots
    double alpha = 1.0;  ///< priority weight in the objective
    double beta = 1.0;   ///< scheduler design weight

    bool operator==(const StreamParams&) const = default;
};

/// Throws ValidationError naming the stream and field of the first violated
/// invariant.
void check_stream_params(const StreamParams& p);

} // namespace aoisched
