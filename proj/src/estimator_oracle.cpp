#include "aoisched/estimator_oracle.hpp"

#include "aoisched/estimator_lc.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <string>

namespace aoisched {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

OraclePosterior from_map(const std::map<Slot, double>& masses, double total)
{
    OraclePosterior post;
    for (const auto& [slot, w] : masses) {
        post.support.push_back(slot);
        post.mass.push_back(w / total);
        post.mean += static_cast<double>(slot) * (w / total);
    }
    return post;
}

OraclePosterior point_mass(Slot s)
{
    return {{s}, {1.0}, static_cast<double>(s)};
}

} // namespace

InterGenerationPmf InterGenerationPmf::table(std::vector<Slot> support, std::vector<double> mass)
{
    if (support.empty() || support.size() != mass.size())
        throw ValidationError("pmf support/mass size mismatch");
    const Slot xmax = *std::max_element(support.begin(), support.end());
    if (*std::min_element(support.begin(), support.end()) < 1)
        throw ValidationError("pmf support must be >= 1");
    if (xmax > 100000)
        throw ValidationError("pmf support too large");

    InterGenerationPmf out;
    out.mass_.assign(static_cast<std::size_t>(xmax), 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < support.size(); ++k) {
        if (!(mass[k] >= 0.0))
            throw ValidationError("pmf mass negative");
        out.mass_[static_cast<std::size_t>(support[k] - 1)] += mass[k];
        total += mass[k];
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ValidationError("pmf mass does not sum to 1");
    for (double& w : out.mass_)
        w /= total;

    out.survival_.assign(out.mass_.size() + 1, 0.0);
    for (std::size_t x = out.mass_.size(); x-- > 0;)
        out.survival_[x] = out.survival_[x + 1] + out.mass_[x];
    out.eq_tail_.assign(out.survival_.size(), 0.0);
    for (std::size_t r = out.survival_.size(); r-- > 0;)
        out.eq_tail_[r] = (r + 1 < out.eq_tail_.size() ? out.eq_tail_[r + 1] : 0.0) + out.survival_[r];
    out.mean_ = out.eq_tail_[0];
    return out;
}

InterGenerationPmf InterGenerationPmf::geometric(double lambda)
{
    if (!(lambda > 0.0 && lambda <= 1.0))
        throw ValidationError("pmf lambda out of range");
    InterGenerationPmf out;
    out.geometric_ = true;
    out.lambda_ = lambda;
    out.mean_ = 1.0 / lambda;
    return out;
}

InterGenerationPmf InterGenerationPmf::from_traffic(const GenerationModel& model)
{
    return std::visit(overloaded{
                          [](const BernoulliTraffic& m) { return geometric(m.lambda); },
                          [](const PeriodicTraffic& m) { return table({m.period}, {1.0}); },
                          [](const UniformIntegerTraffic& m) {
                              std::vector<Slot> support;
                              for (Slot x = m.lo; x <= m.hi; ++x)
                                  support.push_back(x);
                              return table(support, std::vector<double>(support.size(), 1.0 / support.size()));
                          },
                      },
                      model);
}

double InterGenerationPmf::pmf(Slot x) const
{
    if (x < 1)
        return 0.0;
    if (geometric_)
        return lambda_ * survival_power(1.0 - lambda_, x - 1);
    return static_cast<std::size_t>(x) <= mass_.size() ? mass_[static_cast<std::size_t>(x - 1)] : 0.0;
}

double InterGenerationPmf::hazard(Slot x) const
{
    if (geometric_)
        return lambda_;
    if (x < 1)
        return 0.0;
    const auto i = static_cast<std::size_t>(x - 1);
    if (i >= mass_.size() || survival_[i] <= 0.0)
        return 1.0;
    return std::min(1.0, mass_[i] / survival_[i]);
}

double InterGenerationPmf::first_hazard(Slot r) const
{
    if (geometric_)
        return lambda_;
    if (r < 1)
        return 0.0;
    const auto i = static_cast<std::size_t>(r - 1);
    if (i >= mass_.size() || eq_tail_[i] <= 0.0)
        return 1.0;
    return std::min(1.0, survival_[i] / eq_tail_[i]);
}

std::optional<Slot> InterGenerationPmf::max_support() const
{
    if (geometric_)
        return std::nullopt;
    return static_cast<Slot>(mass_.size());
}

OraclePosteriors exact_posterior_current(const ObservationState& state, const InterGenerationPmf& pmf, Slot t,
                                         Slot w_max)
{
    const bool boot = state.bootstrap();
    const Slot anchor = boot ? 0 : state.tau_pre_bar;
    if (!boot && !(state.tau_pre_bar < state.tau_cur && state.tau_cur <= state.tau_cur_bar && state.tau_cur_bar <= t))
        throw ContractViolation("observation state out of order");
    if (t <= anchor)
        throw ContractViolation("empty interval");
    if (t - anchor > w_max)
        throw OracleError("oracle window overflow");

    std::map<Slot, double> d_mass;
    std::map<Slot, double> u_mass;
    double total = 0.0;
    constexpr Slot kNone = -1;

    // Depth-first over generate / don't-generate at each slot of the window.
    std::function<void(Slot, Slot, Slot, double)> visit = [&](Slot s, Slot last, Slot d_last, double w) {
        if (w == 0.0)
            return;
        if (!boot && s == state.tau_cur + 1) {
            // Just finished slot tau_cur: the distinct packet must exist.
            if (last == kNone)
                return;
            d_last = last;
        }
        if (s > t) {
            if (last == kNone)
                return;
            total += w;
            d_mass[boot ? 0 : d_last] += w;
            u_mass[last] += w;
            return;
        }
        const double h = last == kNone ? pmf.first_hazard(s - anchor) : pmf.hazard(s - last);
        const bool forbidden = !boot && s > state.tau_cur && s <= state.tau_cur_bar;
        if (!forbidden)
            visit(s + 1, s, d_last, w * h);
        visit(s + 1, last, d_last, w * (1.0 - h));
    };
    visit(anchor + 1, kNone, kNone, 1.0);

    if (!(total > 0.0))
        throw OracleError("oracle posterior degenerate");
    return {from_map(d_mass, total), from_map(u_mass, total)};
}

RenewalFilter::RenewalFilter(const InterGenerationPmf& pmf, Slot anchor, bool keep_full)
    : pmf_(&pmf), anchor_(anchor), slot_(anchor)
{
    if (keep_full)
        cap_ = std::numeric_limits<std::size_t>::max();
    else if (const auto xmax = pmf.max_support())
        cap_ = static_cast<std::size_t>(*xmax);
    else
        cap_ = 1; // constant hazard: all ages >= 1 share one bucket
}

void RenewalFilter::advance(bool allow_generation)
{
    const double h_first = pmf_->first_hazard(slot_ - anchor_ + 1);
    double generated = none_ * h_first;
    none_ *= 1.0 - h_first;

    // Lumped ages only exist for constant-hazard laws.
    const double h_tail = pmf_->hazard(static_cast<Slot>(std::min<std::size_t>(cap_, 1u << 30)) + 1);
    generated += tail_mass_ * h_tail;
    tail_moment_ = (tail_moment_ + tail_mass_) * (1.0 - h_tail);
    tail_mass_ *= 1.0 - h_tail;

    const std::size_t n = ages_.size();
    std::vector<double> next(std::min(cap_, n + 1), 0.0);
    for (std::size_t d = 0; d < n; ++d) {
        const double h = pmf_->hazard(static_cast<Slot>(d) + 1);
        generated += ages_[d] * h;
        const double stay = ages_[d] * (1.0 - h);
        if (d + 1 < next.size()) {
            next[d + 1] = stay;
        } else {
            tail_mass_ += stay;
            tail_moment_ += stay * static_cast<double>(d + 1);
        }
    }
    next[0] = allow_generation ? generated : 0.0;
    ages_ = std::move(next);
    ++slot_;
    normalize();
}

void RenewalFilter::advance_to(Slot s, bool allow_generation)
{
    if (s < slot_)
        throw ContractViolation("renewal filter cannot move backwards");
    while (slot_ < s)
        advance(allow_generation);
}

void RenewalFilter::require_generation()
{
    none_ = 0.0;
    normalize();
}

void RenewalFilter::normalize()
{
    const double total = none_ + tail_mass_ + std::accumulate(ages_.begin(), ages_.end(), 0.0);
    if (!(total > 0.0))
        throw OracleError("oracle posterior degenerate");
    none_ /= total;
    tail_mass_ /= total;
    tail_moment_ /= total;
    for (double& w : ages_)
        w /= total;
}

double RenewalFilter::mean_last_generation() const
{
    const double generated = 1.0 - none_;
    if (!(generated > 0.0))
        throw OracleError("oracle posterior degenerate");
    const double now = static_cast<double>(slot_);
    double mean = tail_mass_ * now - tail_moment_;
    for (std::size_t d = 0; d < ages_.size(); ++d)
        mean += ages_[d] * (now - static_cast<double>(d));
    return mean / generated;
}

OraclePosterior RenewalFilter::posterior() const
{
    if (tail_mass_ > 0.0)
        throw ContractViolation("posterior() requires an unlumped filter");
    std::map<Slot, double> masses;
    double total = 0.0;
    for (std::size_t d = 0; d < ages_.size(); ++d) {
        if (ages_[d] > 0.0) {
            masses[slot_ - static_cast<Slot>(d)] += ages_[d];
            total += ages_[d];
        }
    }
    if (!(total > 0.0))
        throw OracleError("oracle posterior degenerate");
    return from_map(masses, total);
}

OraclePosteriors filtered_posterior_current(const ObservationState& state, const InterGenerationPmf& pmf, Slot t)
{
    if (state.bootstrap()) {
        if (t < 1)
            throw ContractViolation("empty interval");
        RenewalFilter f(pmf, 0, true);
        f.advance_to(t, true);
        f.require_generation();
        return {point_mass(0), f.posterior()};
    }
    if (!(state.tau_pre_bar < state.tau_cur && state.tau_cur <= state.tau_cur_bar && state.tau_cur_bar <= t))
        throw ContractViolation("observation state out of order");
    RenewalFilter f(pmf, state.tau_pre_bar, true);
    f.advance_to(state.tau_cur, true);
    f.require_generation();
    f.advance_to(state.tau_cur_bar, false);
    OraclePosterior d = f.posterior();
    f.advance_to(t, true);
    return {std::move(d), f.posterior()};
}

EstimatorState oracle_step(const EstimatorState& est, ObservationState& state, const StreamParams& params,
                           const InterGenerationPmf& pmf, Slot t, bool scheduled, bool c_u,
                           std::optional<std::uint64_t> packet_id, Slot w_max)
{
    state = on_ul_outcome(state, t, scheduled, c_u, packet_id);
    const OraclePosteriors post = exact_posterior_current(state, pmf, t, w_max);
    EstimatorState out = est;
    out.t = t;
    out.gamma_u_hat = post.u.mean;
    out.gamma_d_cur_hat = post.d_cur.mean;
    out = update_destination(out, scheduled && c_u, params.p_dest);
    out.a_hat = static_cast<double>(t) - out.gamma_u_hat;
    out.A_hat = static_cast<double>(t + params.theta) - out.gamma_d_hat;
    return out;
}

OracleEstimator::OracleEstimator(const StreamParams& params, InterGenerationPmf pmf)
    : params_(params), pmf_(std::move(pmf)), settled_(pmf_, 0), running_(pmf_, 0)
{}

const EstimatorState& OracleEstimator::prepare(Slot t)
{
    running_.advance_to(t, true);
    est_.t = t;
    est_.gamma_d_cur_hat = d_cur_;
    est_.gamma_u_hat = running_.mean_last_generation();
    est_.a_hat = static_cast<double>(t) - est_.gamma_u_hat;
    est_.A_hat = static_cast<double>(t + params_.theta) - est_.gamma_d_hat;
    return est_;
}

const EstimatorState& OracleEstimator::observe(Slot t, bool scheduled, bool c_u,
                                               std::optional<std::uint64_t> packet_id)
{
    if (!(scheduled && c_u)) {
        on_ul_outcome(obs_, t, scheduled, c_u, packet_id);
        if (est_.t != t)
            prepare(t);
        return est_;
    }

    const bool distinct = obs_.last_packet_id != packet_id;
    const Slot anchor = obs_.bootstrap() ? 0 : obs_.tau_cur_bar;
    obs_ = on_ul_outcome(obs_, t, scheduled, c_u, packet_id);
    if (distinct) {
        settled_ = RenewalFilter(pmf_, anchor);
        settled_.advance_to(t, true);
        settled_.require_generation();
    } else {
        settled_.advance_to(t, false);
    }
    running_ = settled_;
    d_cur_ = settled_.mean_last_generation();

    est_.t = t;
    est_.gamma_d_cur_hat = d_cur_;
    est_.gamma_u_hat = d_cur_;
    est_ = update_destination(est_, true, params_.p_dest);
    est_.a_hat = static_cast<double>(t) - est_.gamma_u_hat;
    est_.A_hat = static_cast<double>(t + params_.theta) - est_.gamma_d_hat;
    return est_;
}

} // namespace aoisched
