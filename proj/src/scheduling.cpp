#include "aoisched/scheduling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace aoisched {

namespace {

constexpr double kIneligible = -std::numeric_limits<double>::infinity();

void require_sizes(std::size_t n, std::initializer_list<std::size_t> sizes)
{
    for (std::size_t s : sizes) {
        if (s != n)
            throw ContractViolation("per-stream inputs have mismatched lengths");
    }
}

/// Indices of the K largest scores passing `keep`, ties to the lowest index.
template <class Keep>
std::vector<StreamId> top_k(std::span<const double> scores, int k_budget, Keep keep)
{
    std::vector<std::size_t> idx;
    idx.reserve(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (keep(i))
            idx.push_back(i);
    }
    const auto better = [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
    };
    const std::size_t k = std::min(idx.size(), static_cast<std::size_t>(std::max(k_budget, 0)));
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), better);
    std::vector<StreamId> out;
    out.reserve(k);
    for (std::size_t j = 0; j < k; ++j)
        out.push_back(static_cast<StreamId>(idx[j] + 1));
    return out;
}

} // namespace

std::string policy_name(Policy p)
{
    switch (p) {
    case Policy::mw_lc: return "mw_lc";
    case Policy::mw_ltr: return "mw_ltr";
    case Policy::mw_enf: return "mw_enf";
    case Policy::rr: return "rr";
    case Policy::pf: return "pf";
    case Policy::random: return "random";
    case Policy::noop: return "noop";
    }
    return "unknown";
}

Policy parse_policy(const std::string& name)
{
    for (Policy p : {Policy::mw_lc, Policy::mw_ltr, Policy::mw_enf, Policy::rr, Policy::pf, Policy::random}) {
        if (policy_name(p) == name)
            return p;
    }
    throw ValidationError("unknown policy '" + name + "'");
}

bool is_max_weight(Policy p) noexcept
{
    return p == Policy::mw_lc || p == Policy::mw_ltr || p == Policy::mw_enf;
}

double mw_weight(double beta, double p_u, double p_dest, const EstimatorState& est) noexcept
{
    return beta * p_u * p_dest * (est.gamma_u_hat - est.gamma_d_hat);
}

ScheduleDecision mw_lc_select(std::span<const double> weights, int k_budget, Slot t)
{
    ScheduleDecision d;
    d.slot = t;
    d.weights.assign(weights.begin(), weights.end());
    d.selected = top_k(weights, k_budget, [&](std::size_t i) { return weights[i] > 0.0; });
    return d;
}

std::vector<double> mw_weights(std::span<const StreamParams> params, std::span<const double> reliabilities,
                               std::span<const EstimatorState> estimates, std::span<const bool> eligible)
{
    require_sizes(params.size(), {reliabilities.size(), estimates.size(), eligible.size()});
    std::vector<double> w(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        w[i] = eligible[i] ? mw_weight(params[i].beta, reliabilities[i], params[i].p_dest, estimates[i])
                           : kIneligible;
    }
    return w;
}

ScheduleDecision mw_ltr_select(std::span<const StreamParams> params, std::span<const double> mean_reliabilities,
                               std::span<const EstimatorState> lc_estimates, std::span<const bool> eligible,
                               int k_budget, Slot t)
{
    return mw_lc_select(mw_weights(params, mean_reliabilities, lc_estimates, eligible), k_budget, t);
}

ScheduleDecision mw_enf_select(std::span<const StreamParams> params, std::span<const double> reliabilities,
                               std::span<const EstimatorState> oracle_estimates, std::span<const bool> eligible,
                               int k_budget, Slot t)
{
    return mw_lc_select(mw_weights(params, reliabilities, oracle_estimates, eligible), k_budget, t);
}

double drift(std::span<const double> betas, std::span<const double> weights, const ScheduleDecision& decision)
{
    const double n = static_cast<double>(betas.size());
    double served = 0.0;
    for (StreamId id : decision.selected)
        served += weights[static_cast<std::size_t>(id - 1)];
    return std::accumulate(betas.begin(), betas.end(), 0.0) / n - served / n;
}

ScheduleDecision RoundRobin::select(std::span<const bool> eligible, int k_budget, Slot t)
{
    if (static_cast<int>(eligible.size()) != n_)
        throw ContractViolation("eligibility mask has wrong length");
    ScheduleDecision d;
    d.slot = t;
    StreamId id = cursor_;
    for (int step = 0; step < n_ && static_cast<int>(d.selected.size()) < k_budget; ++step) {
        id = id % n_ + 1;
        if (eligible[static_cast<std::size_t>(id - 1)]) {
            d.selected.push_back(id);
            cursor_ = id;
        }
    }
    return d;
}

ScheduleDecision ProportionalFair::select(std::span<const double> p_u, std::span<const bool> eligible, int k_budget,
                                          Slot t) const
{
    require_sizes(ewma_.size(), {p_u.size(), eligible.size()});
    std::vector<double> score(ewma_.size());
    for (std::size_t i = 0; i < score.size(); ++i)
        score[i] = p_u[i] / std::max(ewma_[i], epsilon_);
    ScheduleDecision d;
    d.slot = t;
    d.selected = top_k(score, k_budget, [&](std::size_t i) { return eligible[i]; });
    return d;
}

void ProportionalFair::update(const ScheduleDecision& decision, std::span<const double> p_u)
{
    require_sizes(ewma_.size(), {p_u.size()});
    const double a = 1.0 / time_constant_;
    std::vector<bool> served(ewma_.size(), false);
    for (StreamId id : decision.selected)
        served[static_cast<std::size_t>(id - 1)] = true;
    for (std::size_t i = 0; i < ewma_.size(); ++i)
        ewma_[i] = (1.0 - a) * ewma_[i] + a * (served[i] ? p_u[i] : 0.0);
}

ScheduleDecision random_select(std::span<const bool> eligible, int k_budget, RandomStream& rng, Slot t)
{
    std::vector<StreamId> pool;
    for (std::size_t i = 0; i < eligible.size(); ++i) {
        if (eligible[i])
            pool.push_back(static_cast<StreamId>(i + 1));
    }
    const std::size_t k = std::min(pool.size(), static_cast<std::size_t>(std::max(k_budget, 0)));
    for (std::size_t j = 0; j < k; ++j) {
        const auto pick = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(j),
                                                                    static_cast<std::int64_t>(pool.size() - 1)));
        std::swap(pool[j], pool[pick]);
    }
    pool.resize(k);
    ScheduleDecision d;
    d.slot = t;
    d.selected = std::move(pool);
    return d;
}

} // namespace aoisched
