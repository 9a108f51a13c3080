#pragma once

#include "aoisched/scenario.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace aoisched {

class ScenarioNotFound : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed JSON, wrong value types, or unknown keys. Messages carry the
/// origin and, for syntax errors, the line number.
class ScenarioParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses a scenario document. Relative empirical-table paths resolve against
/// `base_dir`. `origin` prefixes error messages.
ScenarioConfig parse_scenario(const std::string& text, const std::filesystem::path& base_dir,
                              const std::string& origin = "<scenario>");
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Serializes a config so that parse_scenario reproduces it.
std::string scenario_to_json(const ScenarioConfig& config);

enum class SweepParam { mean_interval, lambda, p_dest, theta, n_streams, k_budget };

std::string sweep_param_name(SweepParam p);
SweepParam parse_sweep_param(const std::string& name);

struct SweepSpec {
    ScenarioConfig base;
    SweepParam param = SweepParam::mean_interval;
    std::vector<double> values;
    std::vector<Policy> policies;
    std::vector<std::uint64_t> seeds;
    std::optional<Slot> horizon;
    /// Traffic kinds to cross with the values; empty keeps the base traffic.
    std::vector<std::string> traffic_kinds;
};

/// Sweep document: {"base": path, "param": name, "values": [...],
/// "policies": [...], "seeds": [...] | {"from": a, "to": b}, "horizon": T,
/// "traffic_kinds": [...]}. Seeds default to 1..10 and horizon to 100000.
SweepSpec load_sweep(const std::filesystem::path& path);
SweepSpec parse_sweep(const std::string& text, const std::filesystem::path& base_dir,
                      const std::string& origin = "<sweep>");
void check_sweep(const SweepSpec& spec);

/// Substitutes one swept value into every stream (or the network size).
ScenarioConfig apply_sweep_value(ScenarioConfig config, SweepParam param, double value);

/// Parses "a..b" or "a,b,c" into a seed list.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

} // namespace aoisched
