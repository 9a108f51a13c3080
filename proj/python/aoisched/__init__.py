"""Age-of-Information estimation and scheduling simulator."""

from ._aoisched import (
    ObservationState,
    OracleError,
    ScenarioNotFound,
    ScenarioParseError,
    ValidationError,
    estimate_timestamps,
    eta_d,
    eta_u,
    exact_posterior,
    mw_select,
    normalize_scenario,
    policies,
    q_d,
    q_u,
    run_json,
    run_scenario,
)

__all__ = [
    "ObservationState",
    "OracleError",
    "ScenarioNotFound",
    "ScenarioParseError",
    "ValidationError",
    "estimate_timestamps",
    "eta_d",
    "eta_u",
    "exact_posterior",
    "mw_select",
    "normalize_scenario",
    "policies",
    "q_d",
    "q_u",
    "run_json",
    "run_scenario",
]
