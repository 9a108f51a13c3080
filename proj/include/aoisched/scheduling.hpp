#pragma once

#include "aoisched/domain.hpp"
#include "aoisched/estimator.hpp"
#include "aoisched/random.hpp"

#include <span>
#include <string>
#include <vector>

namespace aoisched {

enum class Policy { mw_lc, mw_ltr, mw_enf, rr, pf, random, noop };

std::string policy_name(Policy p);
/// Parses "mw_lc" | "mw_ltr" | "mw_enf" | "rr" | "pf" | "random".
Policy parse_policy(const std::string& name);
bool is_max_weight(Policy p) noexcept;

struct ScheduleDecision {
    Slot slot = 0;
    std::vector<StreamId> selected; ///< ascending by rank, at most K entries
    std::vector<double> weights;    ///< per stream (index id-1); empty for non-MW policies
};

/// Drift-reduction score beta * p_u * p_dest * (gamma_u_hat - gamma_d_hat).
/// Equal to beta * p_u * p_dest * (A_hat - a_hat - theta); theta cancels.
double mw_weight(double beta, double p_u, double p_dest, const EstimatorState& est) noexcept;

/// Up to K streams with the largest strictly positive weights; ties go to the
/// lowest id. Weight index i belongs to stream i+1.
ScheduleDecision mw_lc_select(std::span<const double> weights, int k_budget, Slot t = 0);

/// Weights from per-stream reliabilities and estimates. Ineligible streams get -inf.
std::vector<double> mw_weights(std::span<const StreamParams> params, std::span<const double> reliabilities,
                               std::span<const EstimatorState> estimates, std::span<const bool> eligible);

/// Max-Weight with long-term reliabilities in place of per-frame ones.
ScheduleDecision mw_ltr_select(std::span<const StreamParams> params, std::span<const double> mean_reliabilities,
                               std::span<const EstimatorState> lc_estimates, std::span<const bool> eligible,
                               int k_budget, Slot t = 0);

/// Max-Weight driven by oracle timestamp estimates.
ScheduleDecision mw_enf_select(std::span<const StreamParams> params, std::span<const double> reliabilities,
                               std::span<const EstimatorState> oracle_estimates, std::span<const bool> eligible,
                               int k_budget, Slot t = 0);

/// Conditional one-slot drift (1/N) sum beta - (1/N) sum_{selected} W.
double drift(std::span<const double> betas, std::span<const double> weights, const ScheduleDecision& decision);

class RoundRobin {
public:
    explicit RoundRobin(int n_streams, StreamId cursor = 0) : n_(n_streams), cursor_(cursor) {}

    /// Next K eligible ids after the cursor, cyclically; the cursor moves to
    /// the last pick.
    ScheduleDecision select(std::span<const bool> eligible, int k_budget, Slot t = 0);
    StreamId cursor() const noexcept { return cursor_; }

private:
    int n_;
    StreamId cursor_;
};

class ProportionalFair {
public:
    explicit ProportionalFair(int n_streams, double time_constant = 100.0, double epsilon = 1e-6)
        : ewma_(static_cast<std::size_t>(n_streams), 0.0), time_constant_(time_constant), epsilon_(epsilon)
    {}

    /// Top K by p_u / max(ewma, epsilon), lowest id on ties.
    ScheduleDecision select(std::span<const double> p_u, std::span<const bool> eligible, int k_budget,
                            Slot t = 0) const;
    /// ewma <- (1 - 1/T) ewma + (1/T) served * p_u.
    void update(const ScheduleDecision& decision, std::span<const double> p_u);

    std::span<const double> ewma() const noexcept { return ewma_; }

private:
    std::vector<double> ewma_;
    double time_constant_;
    double epsilon_;
};

/// K eligible streams uniformly at random without replacement.
ScheduleDecision random_select(std::span<const bool> eligible, int k_budget, RandomStream& rng, Slot t = 0);

} // namespace aoisched
