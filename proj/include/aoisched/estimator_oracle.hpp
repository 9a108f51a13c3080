#pragma once

#include "aoisched/domain.hpp"
#include "aoisched/estimator.hpp"
#include "aoisched/traffic.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace aoisched {

class OracleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inter-generation period distribution P(X = x), x >= 1. Either a finite
/// table or a geometric law (Bernoulli generation).
class InterGenerationPmf {
public:
    static InterGenerationPmf table(std::vector<Slot> support, std::vector<double> mass);
    static InterGenerationPmf geometric(double lambda);
    static InterGenerationPmf from_traffic(const GenerationModel& model);

    double pmf(Slot x) const;
    /// P(X = x | X >= x).
    double hazard(Slot x) const;
    /// Hazard of the first generation after an arbitrary anchor slot, using
    /// the stationary forward-recurrence law P(R = r) = P(X >= r) / E[X].
    double first_hazard(Slot r) const;
    double mean() const noexcept { return mean_; }
    /// Largest x with positive mass; empty for the geometric law.
    std::optional<Slot> max_support() const;
    bool geometric() const noexcept { return geometric_; }
    /// Rate of the geometric law.
    double rate() const noexcept { return lambda_; }
    /// P(X = x) for x = 1..max_support(); empty for the geometric law.
    const std::vector<double>& table_mass() const noexcept { return mass_; }

    bool operator==(const InterGenerationPmf&) const = default;

private:
    bool geometric_ = false;
    double lambda_ = 1.0;
    std::vector<double> mass_;     // mass_[x-1] = P(X = x)
    std::vector<double> survival_; // survival_[x-1] = P(X >= x)
    std::vector<double> eq_tail_;  // eq_tail_[r-1] = sum_{k >= r} P(X >= k)
    double mean_ = 1.0;
};

struct OraclePosterior {
    std::vector<Slot> support;
    std::vector<double> mass;
    double mean = 0.0;
};

struct OraclePosteriors {
    OraclePosterior d_cur; ///< generation slot of the last distinct packet received
    OraclePosterior u;     ///< generation slot of the packet stored at slot t
};

inline constexpr Slot kDefaultOracleWindow = 30;

/// Exact posterior by enumerating every generation pattern on
/// (tau_pre_bar, t]. Conditioning: at least one generation in
/// (tau_pre_bar, tau_cur], none in (tau_cur, tau_cur_bar]. The first
/// generation after tau_pre_bar follows the forward-recurrence law, so the
/// previous packet's unknown phase is averaged out. Before any reception the
/// window is (0, t] with at least one generation and d_cur is a point mass at 0.
/// Throws OracleError("oracle window overflow") when t - tau_pre_bar > w_max.
OraclePosteriors exact_posterior_current(const ObservationState& state, const InterGenerationPmf& pmf, Slot t,
                                         Slot w_max = kDefaultOracleWindow);

/// Forward filter over the age since the last generation; computes the same
/// conditionals as exact_posterior_current in O(window * support) time.
class RenewalFilter {
public:
    /// Starts at `anchor` with no generation yet. With keep_full the age
    /// vector is never lumped, so posterior() is available.
    RenewalFilter(const InterGenerationPmf& pmf, Slot anchor, bool keep_full = false);

    void advance(bool allow_generation);
    void advance_to(Slot s, bool allow_generation);
    /// Conditions on at least one generation since the anchor.
    void require_generation();

    Slot slot() const noexcept { return slot_; }
    double no_generation_mass() const noexcept { return none_; }
    /// Posterior mean of the last generation slot given at least one generation.
    double mean_last_generation() const;
    OraclePosterior posterior() const;

private:
    void normalize();

    const InterGenerationPmf* pmf_;
    Slot anchor_;
    Slot slot_;
    double none_ = 1.0;
    std::vector<double> ages_;
    double tail_mass_ = 0.0;
    double tail_moment_ = 0.0;
    std::size_t cap_;
};

/// Posterior via the forward filter; same contract as exact_posterior_current
/// without the window limit.
OraclePosteriors filtered_posterior_current(const ObservationState& state, const InterGenerationPmf& pmf, Slot t);

/// Same recursion as lc_step with oracle means in place of the LC timestamps.
EstimatorState oracle_step(const EstimatorState& est, ObservationState& state, const StreamParams& params,
                           const InterGenerationPmf& pmf, Slot t, bool scheduled, bool c_u,
                           std::optional<std::uint64_t> packet_id, Slot w_max = kDefaultOracleWindow);

/// Incremental oracle estimator built on RenewalFilter; no window limit.
class OracleEstimator final : public StreamEstimator {
public:
    OracleEstimator(const StreamParams& params, InterGenerationPmf pmf);
    OracleEstimator(const OracleEstimator&) = delete;
    OracleEstimator& operator=(const OracleEstimator&) = delete;

    const EstimatorState& prepare(Slot t) override;
    const EstimatorState& observe(Slot t, bool scheduled, bool c_u, std::optional<std::uint64_t> packet_id) override;
    const EstimatorState& estimate() const override { return est_; }
    const ObservationState& observation() const override { return obs_; }

private:
    StreamParams params_;
    InterGenerationPmf pmf_;
    ObservationState obs_;
    EstimatorState est_;
    RenewalFilter settled_; // conditioned on every reception so far, at tau_cur_bar
    RenewalFilter running_; // settled_ advanced freely to the current slot
    double d_cur_ = 0.0;
};

} // namespace aoisched
