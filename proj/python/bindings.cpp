#include "aoisched/engine.hpp"
#include "aoisched/estimator_lc.hpp"
#include "aoisched/estimator_oracle.hpp"
#include "aoisched/scenario_io.hpp"
#include "aoisched/scheduling.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace aoisched;

namespace {

py::dict report_dict(const MetricsReport& m)
{
    py::dict d;
    d["policy"] = m.policy;
    d["estimator"] = m.estimator;
    d["seed"] = m.seed;
    d["horizon"] = m.horizon;
    d["n_streams"] = m.n_streams;
    d["k_budget"] = m.k_budget;
    d["ewsaoi"] = m.ewsaoi;
    d["mean_aoi"] = m.mean_aoi;
    d["nmse"] = m.nmse;
    d["nmse_mean"] = m.nmse_mean;
    d["weighted_sum"] = m.weighted_sum;
    d["grants"] = m.grants;
    d["ul_successes"] = m.ul_successes;
    d["deliveries"] = m.deliveries;
    py::list traces;
    for (const StreamTrace& tr : m.traces) {
        py::dict t;
        t["A"] = tr.A;
        t["a"] = tr.a;
        t["A_hat"] = tr.A_hat;
        t["a_hat"] = tr.a_hat;
        t["gamma_u_hat"] = tr.gamma_u_hat;
        t["gamma_d_hat"] = tr.gamma_d_hat;
        traces.append(t);
    }
    d["traces"] = traces;
    return d;
}

ScenarioConfig with_overrides(ScenarioConfig c, std::optional<std::string> policy, std::optional<std::uint64_t> seed,
                              std::optional<Slot> horizon)
{
    if (policy) {
        c.policy = parse_policy(*policy);
        if (is_max_weight(c.policy))
            c.estimator.reset();
    }
    if (seed)
        c.seed = *seed;
    if (horizon)
        c.horizon = *horizon;
    return c;
}

MetricsReport run_config(const ScenarioConfig& c, bool trace)
{
    RunOptions opt;
    opt.trace = trace;
    opt.measure_runtime = false;
    const ValidatedScenario sc = validate(c);
    py::gil_scoped_release release;
    return run(sc, opt);
}

} // namespace

PYBIND11_MODULE(_aoisched, m)
{
    m.doc() = "AoI estimation and scheduling simulator";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ScenarioParseError>(m, "ScenarioParseError", PyExc_ValueError);
    py::register_exception<ScenarioNotFound>(m, "ScenarioNotFound", PyExc_FileNotFoundError);
    py::register_exception<OracleError>(m, "OracleError", PyExc_RuntimeError);

    py::class_<ObservationState>(m, "ObservationState")
        .def(py::init([](Slot tau_pre, Slot tau_pre_bar, Slot tau_cur, Slot tau_cur_bar,
                         std::optional<std::uint64_t> last_packet_id) {
                 return ObservationState{tau_pre, tau_pre_bar, tau_cur, tau_cur_bar, last_packet_id};
             }),
             py::arg("tau_pre") = 0, py::arg("tau_pre_bar") = 0, py::arg("tau_cur") = 0, py::arg("tau_cur_bar") = 0,
             py::arg("last_packet_id") = std::nullopt)
        .def_readwrite("tau_pre", &ObservationState::tau_pre)
        .def_readwrite("tau_pre_bar", &ObservationState::tau_pre_bar)
        .def_readwrite("tau_cur", &ObservationState::tau_cur)
        .def_readwrite("tau_cur_bar", &ObservationState::tau_cur_bar)
        .def_readwrite("last_packet_id", &ObservationState::last_packet_id)
        .def("__repr__", [](const ObservationState& s) {
            return "ObservationState(" + std::to_string(s.tau_pre) + ", " + std::to_string(s.tau_pre_bar) + ", " +
                   std::to_string(s.tau_cur) + ", " + std::to_string(s.tau_cur_bar) + ")";
        });

    m.def("eta_d", &eta_d, py::arg("lam"), py::arg("tau_cur"), py::arg("tau_pre_bar"));
    m.def("eta_u", &eta_u, py::arg("lam"), py::arg("t"), py::arg("tau_cur_bar"));
    m.def("q_d", &q_d, py::arg("state"), py::arg("lam"), py::arg("phi"));
    m.def("q_u", &q_u, py::arg("state"), py::arg("lam"), py::arg("t"), py::arg("phi"));
    m.def(
        "estimate_timestamps",
        [](const ObservationState& s, double lambda, Slot t) {
            const auto e = estimate_timestamps(s, lambda, t);
            return py::make_tuple(e.gamma_u_hat, e.gamma_d_cur_hat);
        },
        py::arg("state"), py::arg("lam"), py::arg("t"),
        "Returns (gamma_u_hat, gamma_d_cur_hat).");
    m.def(
        "exact_posterior",
        [](const ObservationState& s, Slot t, std::optional<double> lambda, std::optional<std::vector<Slot>> support,
           std::optional<std::vector<double>> mass) {
            const InterGenerationPmf pmf = lambda ? InterGenerationPmf::geometric(*lambda)
                                                  : InterGenerationPmf::table(support.value(), mass.value());
            const auto p = exact_posterior_current(s, pmf, t);
            py::dict d;
            d["u_support"] = p.u.support;
            d["u_mass"] = p.u.mass;
            d["u_mean"] = p.u.mean;
            d["d_support"] = p.d_cur.support;
            d["d_mass"] = p.d_cur.mass;
            d["d_mean"] = p.d_cur.mean;
            return d;
        },
        py::arg("state"), py::arg("t"), py::kw_only(), py::arg("lam") = std::nullopt,
        py::arg("support") = std::nullopt, py::arg("mass") = std::nullopt,
        "Brute-force posterior of the generation slots, for a geometric law (lam) or a table pmf.");

    m.def(
        "mw_select",
        [](const std::vector<double>& weights, int k) { return mw_lc_select(weights, k).selected; },
        py::arg("weights"), py::arg("k"), "Top-K strictly positive weights; ties go to the lowest id.");
    m.def("policies", [] {
        std::vector<std::string> out;
        for (Policy p : {Policy::mw_lc, Policy::mw_ltr, Policy::mw_enf, Policy::rr, Policy::pf, Policy::random})
            out.push_back(policy_name(p));
        return out;
    });

    m.def(
        "run_scenario",
        [](const std::filesystem::path& path, std::optional<std::string> policy, std::optional<std::uint64_t> seed,
           std::optional<Slot> horizon, bool trace) {
            return report_dict(run_config(with_overrides(load_scenario(path), policy, seed, horizon), trace));
        },
        py::arg("path"), py::kw_only(), py::arg("policy") = std::nullopt, py::arg("seed") = std::nullopt,
        py::arg("horizon") = std::nullopt, py::arg("trace") = false);
    m.def(
        "run_json",
        [](const std::string& text, std::optional<std::string> policy, std::optional<std::uint64_t> seed,
           std::optional<Slot> horizon, bool trace) {
            return report_dict(
                run_config(with_overrides(parse_scenario(text, std::filesystem::current_path(), "<json>"), policy,
                                          seed, horizon),
                           trace));
        },
        py::arg("text"), py::kw_only(), py::arg("policy") = std::nullopt, py::arg("seed") = std::nullopt,
        py::arg("horizon") = std::nullopt, py::arg("trace") = false);
    m.def(
        "normalize_scenario",
        [](const std::string& text) {
            return scenario_to_json(validate(parse_scenario(text, std::filesystem::current_path(), "<json>")).config());
        },
        py::arg("text"), "Validated scenario with every default filled in, as JSON text.");
}
