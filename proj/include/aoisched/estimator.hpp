#pragma once

#include "aoisched/domain.hpp"

#include <cstdint>
#include <optional>

namespace aoisched {

/// Compressed per-stream reception history kept by the gNB: first/last
/// reception slots of the previous and current distinct packets.
struct ObservationState {
    Slot tau_pre = 0;
    Slot tau_pre_bar = 0;
    Slot tau_cur = 0;
    Slot tau_cur_bar = 0;
    std::optional<std::uint64_t> last_packet_id;

    /// No distinct packet received yet; all timestamps sit on the virtual anchor.
    bool bootstrap() const noexcept { return !last_packet_id.has_value(); }

    bool operator==(const ObservationState&) const = default;
};

/// Estimator outputs for one stream at slot t. Timestamps are in slots.
struct EstimatorState {
    Slot t = 0;
    double gamma_u_hat = 0.0;     ///< stored-packet generation time at the source
    double gamma_d_cur_hat = 0.0; ///< generation time of the last distinct packet received
    double gamma_d_hat = 0.0;     ///< destination timestamp (recursion carry)
    double a_hat = 0.0;           ///< t - gamma_u_hat
    double A_hat = 0.0;           ///< t + theta - gamma_d_hat

    bool operator==(const EstimatorState&) const = default;
};

/// Update on a UL outcome. Failed or unscheduled slots leave the state as is.
/// `packet_id` must be present iff scheduled && c_u.
ObservationState on_ul_outcome(ObservationState state, Slot t, bool scheduled, bool c_u,
                               std::optional<std::uint64_t> packet_id);

/// Common driver interface so the engine can swap timestamp estimators.
class StreamEstimator {
public:
    virtual ~StreamEstimator() = default;

    /// Pre-decision refresh at slot t using receptions strictly before t.
    virtual const EstimatorState& prepare(Slot t) = 0;

    /// Folds in the UL outcome of slot t.
    virtual const EstimatorState& observe(Slot t, bool scheduled, bool c_u, std::optional<std::uint64_t> packet_id) = 0;

    virtual const EstimatorState& estimate() const = 0;
    virtual const ObservationState& observation() const = 0;
};

} // namespace aoisched
