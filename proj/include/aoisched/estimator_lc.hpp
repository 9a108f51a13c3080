#pragma once

#include "aoisched/domain.hpp"
#include "aoisched/estimator.hpp"

#include <cstdint>
#include <optional>

namespace aoisched {

/// base^k for base in [0,1], flushed to 0 once below 1e-300.
double survival_power(double base, Slot k);

/// Conditional per-slot generation probability on [tau_pre_bar + 1, tau_cur]:
/// lambda / (1 - (1 - lambda)^(tau_cur - tau_pre_bar)).
double eta_d(double lambda, Slot tau_cur, Slot tau_pre_bar);

/// Same quantity for the interval [tau_cur_bar + 1, t].
double eta_u(double lambda, Slot t, Slot tau_cur_bar);

/// Probability that the last distinct packet received was generated at phi.
double q_d(const ObservationState& state, double lambda, Slot phi);

/// Probability that the packet stored at the source at slot t was generated
/// at phi. Before any reception the support is [1, t] with a normalized
/// truncated-geometric shape.
double q_u(const ObservationState& state, double lambda, Slot t, Slot phi);

struct TimestampEstimate {
    double gamma_u_hat = 0.0;
    double gamma_d_cur_hat = 0.0;
};

/// Posterior means of the stored-packet and last-received generation times,
/// via closed-form truncated-geometric moments.
TimestampEstimate estimate_timestamps(const ObservationState& state, double lambda, Slot t);

/// Reference path: explicit summation of phi * q(phi) over the support.
TimestampEstimate estimate_timestamps_direct(const ObservationState& state, double lambda, Slot t);

/// Destination recursion: convex step toward gamma_d_cur_hat on a UL success.
EstimatorState update_destination(EstimatorState est, bool ul_success, double p_dest);

/// Pre-decision estimate at slot t: refreshes gamma_u_hat / a_hat and reports
/// A_hat from the carried destination timestamp.
EstimatorState lc_prepare(const EstimatorState& carry, const ObservationState& state, const StreamParams& params,
                          Slot t);

/// One full estimator update for slot t after the UL outcome is known.
EstimatorState lc_step(const EstimatorState& est, ObservationState& state, const StreamParams& params, Slot t,
                       bool scheduled, bool c_u, std::optional<std::uint64_t> packet_id);

/// Stateful per-stream wrapper. Caches gamma_d_cur_hat between distinct
/// receptions so per-slot work is O(1).
class LcEstimator final : public StreamEstimator {
public:
    explicit LcEstimator(const StreamParams& params);

    const EstimatorState& prepare(Slot t) override;
    const EstimatorState& observe(Slot t, bool scheduled, bool c_u, std::optional<std::uint64_t> packet_id) override;
    const EstimatorState& estimate() const override { return est_; }
    const ObservationState& observation() const override { return obs_; }

    void restore(const ObservationState& obs, const EstimatorState& est);
    const StreamParams& params() const { return params_; }

private:
    void refresh_d_cur();

    StreamParams params_;
    ObservationState obs_;
    EstimatorState est_;
    double d_cur_ = 0.0;
};

} // namespace aoisched
