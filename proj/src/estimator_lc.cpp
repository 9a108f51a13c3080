#include "aoisched/estimator_lc.hpp"

#include <cmath>
#include <string>

namespace aoisched {

namespace {

constexpr double kUnderflow = 1e-300;

/// 1 - (1 - eta)^n without cancellation for small eta.
double one_minus_power(double eta, Slot n)
{
    if (n <= 0)
        return 0.0;
    if (eta >= 1.0)
        return 1.0;
    return -std::expm1(static_cast<double>(n) * std::log1p(-eta));
}

double conditional_rate(double lambda, Slot n)
{
    if (n <= 0)
        throw ContractViolation("empty interval");
    if (!(lambda > 0.0 && lambda <= 1.0))
        throw ContractViolation("lambda out of range");
    return lambda / one_minus_power(lambda, n);
}

/// Mean distance from the window end under weights eta (1-eta)^k, k in [0, n).
double mean_offset(double eta, Slot n)
{
    const double r = 1.0 - eta;
    if (r <= 0.0 || n <= 1)
        return 0.0;
    const double rn = survival_power(r, n);
    return r / eta - static_cast<double>(n) * rn / one_minus_power(eta, n);
}

void require_ordered(const ObservationState& s)
{
    if (s.bootstrap())
        return;
    if (!(s.tau_pre <= s.tau_pre_bar && s.tau_pre_bar < s.tau_cur && s.tau_cur <= s.tau_cur_bar))
        throw ContractViolation("observation state out of order");
}

double d_cur_mean(const ObservationState& s, double lambda)
{
    const Slot n = s.tau_cur - s.tau_pre_bar;
    return static_cast<double>(s.tau_cur) - mean_offset(conditional_rate(lambda, n), n);
}

double u_mean(const ObservationState& s, double lambda, Slot t, double d_cur)
{
    if (s.bootstrap()) {
        if (t < 1)
            throw ContractViolation("empty interval");
        return static_cast<double>(t) - mean_offset(conditional_rate(lambda, t), t);
    }
    if (t < s.tau_cur_bar)
        throw ContractViolation("query slot precedes last reception");
    const Slot n = t - s.tau_cur_bar;
    if (n == 0)
        return d_cur;
    const double eta = conditional_rate(lambda, n);
    const double stale = survival_power(1.0 - eta, n);
    const double fresh = one_minus_power(eta, n);
    return stale * d_cur + fresh * (static_cast<double>(t) - mean_offset(eta, n));
}

} // namespace

double survival_power(double base, Slot k)
{
    if (k <= 0)
        return 1.0;
    if (base <= 0.0)
        return 0.0;
    if (base >= 1.0)
        return 1.0;
    const double v = std::pow(base, static_cast<double>(k));
    return v < kUnderflow ? 0.0 : v;
}

double eta_d(double lambda, Slot tau_cur, Slot tau_pre_bar)
{
    return conditional_rate(lambda, tau_cur - tau_pre_bar);
}

double eta_u(double lambda, Slot t, Slot tau_cur_bar)
{
    return conditional_rate(lambda, t - tau_cur_bar);
}

double q_d(const ObservationState& s, double lambda, Slot phi)
{
    if (s.bootstrap())
        return 0.0;
    require_ordered(s);
    if (phi <= s.tau_pre_bar || phi > s.tau_cur)
        return 0.0;
    const Slot n = s.tau_cur - s.tau_pre_bar;
    const double eta = eta_d(lambda, s.tau_cur, s.tau_pre_bar);
    return eta * survival_power(1.0 - eta, s.tau_cur - phi) / one_minus_power(eta, n);
}

double q_u(const ObservationState& s, double lambda, Slot t, Slot phi)
{
    if (s.bootstrap()) {
        if (phi < 1 || phi > t)
            return 0.0;
        const double eta = conditional_rate(lambda, t);
        return eta * survival_power(1.0 - eta, t - phi) / one_minus_power(eta, t);
    }
    require_ordered(s);
    if (t < s.tau_cur_bar)
        throw ContractViolation("query slot precedes last reception");

    const Slot n_u = t - s.tau_cur_bar;
    if (phi > s.tau_pre_bar && phi <= s.tau_cur) {
        const double stale = n_u == 0 ? 1.0 : survival_power(1.0 - eta_u(lambda, t, s.tau_cur_bar), n_u);
        const double eta = eta_d(lambda, s.tau_cur, s.tau_pre_bar);
        const double c = stale / one_minus_power(eta, s.tau_cur - s.tau_pre_bar);
        return eta * survival_power(1.0 - eta, s.tau_cur - phi) * c;
    }
    if (phi > s.tau_cur_bar && phi <= t) {
        const double eta = eta_u(lambda, t, s.tau_cur_bar);
        return eta * survival_power(1.0 - eta, t - phi);
    }
    return 0.0;
}

TimestampEstimate estimate_timestamps(const ObservationState& s, double lambda, Slot t)
{
    if (s.bootstrap())
        return {u_mean(s, lambda, t, 0.0), 0.0};
    require_ordered(s);
    const double d_cur = d_cur_mean(s, lambda);
    return {u_mean(s, lambda, t, d_cur), d_cur};
}

TimestampEstimate estimate_timestamps_direct(const ObservationState& s, double lambda, Slot t)
{
    TimestampEstimate out;
    for (Slot phi = s.tau_pre_bar + 1; phi <= t; ++phi)
        out.gamma_u_hat += static_cast<double>(phi) * q_u(s, lambda, t, phi);
    if (!s.bootstrap()) {
        for (Slot phi = s.tau_pre_bar + 1; phi <= s.tau_cur; ++phi)
            out.gamma_d_cur_hat += static_cast<double>(phi) * q_d(s, lambda, phi);
    }
    return out;
}

ObservationState on_ul_outcome(ObservationState s, Slot t, bool scheduled, bool c_u,
                               std::optional<std::uint64_t> packet_id)
{
    const bool success = scheduled && c_u;
    if (success != packet_id.has_value())
        throw ContractViolation("packet_id must be present exactly on UL success");
    if (!success)
        return s;
    if (t <= s.tau_cur_bar)
        throw ContractViolation("non-monotone reception slot " + std::to_string(t));

    if (s.last_packet_id == packet_id) {
        s.tau_cur_bar = t;
        return s;
    }
    s.tau_pre = s.tau_cur;
    s.tau_pre_bar = s.tau_cur_bar;
    s.tau_cur = t;
    s.tau_cur_bar = t;
    s.last_packet_id = packet_id;
    return s;
}

EstimatorState update_destination(EstimatorState est, bool ul_success, double p_dest)
{
    if (ul_success)
        est.gamma_d_hat = (1.0 - p_dest) * est.gamma_d_hat + p_dest * est.gamma_d_cur_hat;
    return est;
}

EstimatorState lc_prepare(const EstimatorState& carry, const ObservationState& state, const StreamParams& params,
                          Slot t)
{
    const TimestampEstimate ts = estimate_timestamps(state, params.lambda, t);
    EstimatorState out = carry;
    out.t = t;
    out.gamma_u_hat = ts.gamma_u_hat;
    out.gamma_d_cur_hat = ts.gamma_d_cur_hat;
    out.a_hat = static_cast<double>(t) - out.gamma_u_hat;
    out.A_hat = static_cast<double>(t + params.theta) - out.gamma_d_hat;
    return out;
}

EstimatorState lc_step(const EstimatorState& est, ObservationState& state, const StreamParams& params, Slot t,
                       bool scheduled, bool c_u, std::optional<std::uint64_t> packet_id)
{
    state = on_ul_outcome(state, t, scheduled, c_u, packet_id);
    EstimatorState out = lc_prepare(est, state, params, t);
    out = update_destination(out, scheduled && c_u, params.p_dest);
    out.A_hat = static_cast<double>(t + params.theta) - out.gamma_d_hat;
    return out;
}

LcEstimator::LcEstimator(const StreamParams& params) : params_(params) {}

void LcEstimator::refresh_d_cur()
{
    d_cur_ = obs_.bootstrap() ? 0.0 : d_cur_mean(obs_, params_.lambda);
}

const EstimatorState& LcEstimator::prepare(Slot t)
{
    est_.t = t;
    est_.gamma_d_cur_hat = d_cur_;
    est_.gamma_u_hat = u_mean(obs_, params_.lambda, t, d_cur_);
    est_.a_hat = static_cast<double>(t) - est_.gamma_u_hat;
    est_.A_hat = static_cast<double>(t + params_.theta) - est_.gamma_d_hat;
    return est_;
}

const EstimatorState& LcEstimator::observe(Slot t, bool scheduled, bool c_u, std::optional<std::uint64_t> packet_id)
{
    const bool success = scheduled && c_u;
    if (success) {
        const bool distinct = obs_.last_packet_id != packet_id;
        obs_ = on_ul_outcome(obs_, t, scheduled, c_u, packet_id);
        if (distinct)
            refresh_d_cur();
        prepare(t);
        est_ = update_destination(est_, true, params_.p_dest);
        est_.A_hat = static_cast<double>(t + params_.theta) - est_.gamma_d_hat;
    } else {
        on_ul_outcome(obs_, t, scheduled, c_u, packet_id);
        if (est_.t != t)
            prepare(t);
    }
    return est_;
}

void LcEstimator::restore(const ObservationState& obs, const EstimatorState& est)
{
    obs_ = obs;
    est_ = est;
    refresh_d_cur();
}

} // namespace aoisched
