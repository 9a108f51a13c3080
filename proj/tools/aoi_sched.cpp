#include "aoisched/engine.hpp"
#include "aoisched/estimator_lc.hpp"
#include "aoisched/scenario_io.hpp"
#include "aoisched/study.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace aoisched;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitNotFound = 2;
constexpr int kExitValidation = 3;
constexpr int kExitParse = 4;

const char* const kNmseDefinition = "sum_t (Ahat_i(t) - A_i(t))^2 / sum_t A_i(t)^2, network value = mean over streams";
const char* const kWeightedDefinition = "weighted_sum_aoi(t) = sum_i alpha_i A_i(t); ewsaoi = mean_t / N";

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::ofstream open_out(const fs::path& dir, const std::string& name)
{
    fs::create_directories(dir);
    std::ofstream out(dir / name, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + (dir / name).string());
    return out;
}

std::vector<Policy> parse_policy_list(const std::string& text)
{
    std::vector<Policy> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(parse_policy(item));
    if (out.empty())
        throw ValidationError("empty policy list");
    return out;
}

std::vector<double> parse_number_list(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::logic_error&) {
            throw ValidationError("invalid number '" + item + "'");
        }
    }
    return out;
}

void apply_policy_override(ScenarioConfig& c, const std::string& policy)
{
    if (policy.empty())
        return;
    c.policy = parse_policy(policy);
    if (is_max_weight(c.policy))
        c.estimator.reset();
}

json metrics_json(const MetricsReport& m)
{
    return json{{"policy", m.policy},
                {"estimator", m.estimator},
                {"seed", m.seed},
                {"horizon", m.horizon},
                {"n_streams", m.n_streams},
                {"k_budget", m.k_budget},
                {"ewsaoi", m.ewsaoi},
                {"mean_aoi", m.mean_aoi},
                {"nmse", m.nmse},
                {"nmse_mean", m.nmse_mean},
                {"nmse_definition", kNmseDefinition},
                {"weighted_aoi_definition", kWeightedDefinition},
                {"grants", m.grants},
                {"ul_successes", m.ul_successes},
                {"deliveries", m.deliveries}};
}

void write_run_outputs(const fs::path& out, const MetricsReport& m, Slot stride)
{
    {
        auto f = open_out(out, "metrics.json");
        f << metrics_json(m).dump(2) << "\n";
    }
    {
        auto f = open_out(out, "sample_path.csv");
        f << "t,weighted_sum_aoi";
        for (int i = 1; i <= m.n_streams; ++i)
            f << ",A_" << i;
        for (int i = 1; i <= m.n_streams; ++i)
            f << ",Ahat_" << i;
        f << "\n";
        const auto path = sample_path(m.weighted_sum, stride);
        for (std::size_t k = 0; k < path.size(); ++k) {
            f << path[k].first << "," << num(path[k].second);
            for (const StreamTrace& tr : m.traces)
                f << "," << tr.A[k];
            for (const StreamTrace& tr : m.traces)
                f << "," << num(tr.A_hat[k]);
            f << "\n";
        }
    }
    {
        auto f = open_out(out, "cdf.csv");
        f << "weighted_sum_aoi,cdf\n";
        for (const auto& [v, p] : aoi_cdf(m.weighted_sum))
            f << num(v) << "," << num(p) << "\n";
    }
    {
        auto f = open_out(out, "runtime.csv");
        f << "metric,microseconds\n";
        f << "mean," << num(m.runtime.mean_us) << "\n";
        f << "p99," << num(m.runtime.p99_us) << "\n";
        f << "max," << num(m.runtime.max_us) << "\n";
    }
}

void write_events(const fs::path& out, const std::vector<UlEvent>& events)
{
    auto f = open_out(out, "events.csv");
    f << "t,stream_id,scheduled,c_u,packet_id\n";
    for (const UlEvent& e : events) {
        f << e.t << "," << e.stream << "," << int(e.scheduled) << "," << int(e.c_u) << ",";
        if (e.packet_id)
            f << *e.packet_id;
        f << "\n";
    }
}

std::vector<UlEvent> read_events(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ScenarioNotFound("event log not found: " + path.string());
    std::string line;
    std::getline(in, line);
    if (line.rfind("t,stream_id,scheduled,c_u,packet_id", 0) != 0)
        throw ScenarioParseError(path.string() + ":1: expected header t,stream_id,scheduled,c_u,packet_id");
    std::vector<UlEvent> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        if (cells.size() == 4)
            cells.emplace_back();
        try {
            if (cells.size() != 5)
                throw std::invalid_argument("column count");
            UlEvent e;
            e.t = std::stoll(cells[0]);
            e.stream = std::stoi(cells[1]);
            e.scheduled = std::stoi(cells[2]) != 0;
            e.c_u = std::stoi(cells[3]) != 0;
            if (!cells[4].empty() && cells[4] != "\r")
                e.packet_id = std::stoull(cells[4]);
            out.push_back(e);
        } catch (const std::logic_error&) {
            throw ScenarioParseError(path.string() + ":" + std::to_string(lineno) + ": malformed event row");
        }
    }
    return out;
}

json observation_json(const ObservationState& o)
{
    json j{{"tau_pre", o.tau_pre}, {"tau_pre_bar", o.tau_pre_bar}, {"tau_cur", o.tau_cur}, {"tau_cur_bar", o.tau_cur_bar}};
    j["last_packet_id"] = o.last_packet_id ? json(*o.last_packet_id) : json(nullptr);
    return j;
}

json estimate_json(const EstimatorState& e)
{
    return json{{"t", e.t},
                {"gamma_u_hat", e.gamma_u_hat},
                {"gamma_d_cur_hat", e.gamma_d_cur_hat},
                {"gamma_d_hat", e.gamma_d_hat},
                {"a_hat", e.a_hat},
                {"A_hat", e.A_hat}};
}

struct Checkpoint {
    Slot t = 0;
    std::map<StreamId, std::pair<ObservationState, EstimatorState>> streams;
};

Checkpoint read_checkpoint(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ScenarioNotFound("checkpoint not found: " + path.string());
    try {
        const json j = json::parse(in);
        Checkpoint cp;
        cp.t = j.at("t").get<Slot>();
        for (const json& s : j.at("streams")) {
            ObservationState o;
            const json& oj = s.at("observation");
            o.tau_pre = oj.at("tau_pre").get<Slot>();
            o.tau_pre_bar = oj.at("tau_pre_bar").get<Slot>();
            o.tau_cur = oj.at("tau_cur").get<Slot>();
            o.tau_cur_bar = oj.at("tau_cur_bar").get<Slot>();
            if (!oj.at("last_packet_id").is_null())
                o.last_packet_id = oj.at("last_packet_id").get<std::uint64_t>();
            EstimatorState e;
            const json& ej = s.at("estimate");
            e.t = ej.at("t").get<Slot>();
            e.gamma_u_hat = ej.at("gamma_u_hat").get<double>();
            e.gamma_d_cur_hat = ej.at("gamma_d_cur_hat").get<double>();
            e.gamma_d_hat = ej.at("gamma_d_hat").get<double>();
            e.a_hat = ej.at("a_hat").get<double>();
            e.A_hat = ej.at("A_hat").get<double>();
            cp.streams[s.at("id").get<StreamId>()] = {o, e};
        }
        return cp;
    } catch (const json::exception& e) {
        throw ScenarioParseError(path.string() + ": invalid checkpoint: " + e.what());
    }
}

int cmd_run(const std::string& scenario, std::optional<std::uint64_t> seed, const fs::path& out,
            const std::string& policy, std::optional<Slot> horizon, Slot decimate, bool events)
{
    ScenarioConfig c = load_scenario(scenario);
    if (seed)
        c.seed = *seed;
    if (horizon)
        c.horizon = *horizon;
    apply_policy_override(c, policy);
    const ValidatedScenario sc = validate(c);
    RunOptions opt;
    opt.trace = true;
    opt.trace_stride = decimate;
    opt.events = events;
    const MetricsReport m = run(sc, opt);
    write_run_outputs(out, m, decimate);
    if (events)
        write_events(out, m.events);
    std::cout << "policy=" << m.policy << " estimator=" << m.estimator << " seed=" << m.seed << " T=" << m.horizon
              << " EWSAoI=" << num(m.ewsaoi) << " NMSE=" << num(m.nmse_mean) << "\n";
    return 0;
}

int cmd_sweep(const std::string& spec_path, const std::string& scenario, const std::string& param,
              const std::string& values, const std::string& policies, const std::string& seeds,
              std::optional<Slot> horizon, const std::string& kinds, const fs::path& out)
{
    SweepSpec spec;
    if (!spec_path.empty()) {
        spec = load_sweep(spec_path);
    } else {
        if (scenario.empty() || param.empty() || values.empty())
            throw ValidationError("sweep needs --spec or --scenario with --param and --values");
        spec.base = load_scenario(scenario);
        spec.param = parse_sweep_param(param);
        spec.horizon = Slot{100000};
        for (std::uint64_t s = 1; s <= 10; ++s)
            spec.seeds.push_back(s);
    }
    if (!values.empty())
        spec.values = parse_number_list(values);
    if (!param.empty())
        spec.param = parse_sweep_param(param);
    if (!policies.empty())
        spec.policies = parse_policy_list(policies);
    if (!seeds.empty())
        spec.seeds = parse_seed_list(seeds);
    if (horizon)
        spec.horizon = *horizon;
    if (!kinds.empty()) {
        spec.traffic_kinds.clear();
        std::stringstream ss(kinds);
        std::string k;
        while (std::getline(ss, k, ','))
            spec.traffic_kinds.push_back(k);
    }
    const auto rows = run_sweep(spec);
    auto f = open_out(out, "sweep.csv");
    f << "traffic_kind,param,value,policy,mean_ewsaoi,std_ewsaoi,mean_nmse,n_seeds\n";
    for (const SweepRow& r : rows) {
        const std::string line = (r.traffic_kind.empty() ? "base" : r.traffic_kind) + "," +
                                 sweep_param_name(spec.param) + "," + num(r.value) + "," + policy_name(r.policy) +
                                 "," + num(r.mean_ewsaoi) + "," + num(r.std_ewsaoi) + "," + num(r.mean_nmse) + "," +
                                 std::to_string(r.n_seeds);
        f << line << "\n";
        std::cout << line << "\n";
    }
    return 0;
}

int cmd_bench(const std::string& n_list, int reps, Slot horizon, double budget_ms, const std::string& pipelines,
              const std::string& scenario, const fs::path& out)
{
    std::vector<int> ns;
    for (double v : parse_number_list(n_list))
        ns.push_back(static_cast<int>(v));
    std::vector<std::string> names;
    {
        std::stringstream ss(pipelines);
        std::string p;
        while (std::getline(ss, p, ','))
            names.push_back(p);
    }
    std::optional<ScenarioConfig> base;
    if (!scenario.empty())
        base = load_scenario(scenario);
    const auto rows = bench_runtime(ns, reps, names, base, horizon);
    auto f = open_out(out, "runtime.csv");
    f << "pipeline,n_streams,mean_us,p99_us,max_us,budget_ms,pass\n";
    for (const BenchRow& r : rows) {
        const bool pass = r.runtime.mean_us <= budget_ms * 1000.0;
        const std::string line = r.pipeline + "," + std::to_string(r.n_streams) + "," + num(r.runtime.mean_us) + "," +
                                 num(r.runtime.p99_us) + "," + num(r.runtime.max_us) + "," + num(budget_ms) + "," +
                                 (pass ? "1" : "0");
        f << line << "\n";
        std::cout << line << "\n";
    }
    return 0;
}

int cmd_estimator_study(const std::string& scenario, const std::string& policies, std::optional<std::uint64_t> seed,
                        std::optional<Slot> horizon, Slot decimate, const fs::path& out)
{
    ScenarioConfig c = load_scenario(scenario);
    if (seed)
        c.seed = *seed;
    if (horizon)
        c.horizon = *horizon;
    const std::vector<Policy> list = policies.empty() ? std::vector<Policy>{c.policy} : parse_policy_list(policies);
    const StudyResult res = estimator_study(c, list);
    {
        auto f = open_out(out, "nmse.csv");
        f << "policy,estimator,stream_id,nmse,true_drops,estimated_drops,common_drops,drops_equal\n";
        for (const StudyRow& r : res.rows) {
            const std::string line = policy_name(r.policy) + "," + r.estimator + "," + std::to_string(r.stream) +
                                     "," + num(r.nmse) + "," + std::to_string(r.drops.true_drops) + "," +
                                     std::to_string(r.drops.estimated_drops) + "," +
                                     std::to_string(r.drops.common) + "," + (r.drops.equal ? "1" : "0");
            f << line << "\n";
            std::cout << line << "\n";
        }
    }
    auto f = open_out(out, "paths.csv");
    f << "policy,t,stream_id,A,Ahat,a,ahat\n";
    for (std::size_t k = 0; k < list.size(); ++k) {
        const MetricsReport& m = res.reports[k];
        for (std::size_t i = 0; i < m.traces.size(); ++i) {
            const StreamTrace& tr = m.traces[i];
            for (std::size_t s = 0; s < tr.A.size(); s += static_cast<std::size_t>(decimate))
                f << policy_name(list[k]) << "," << s + 1 << "," << i + 1 << "," << tr.A[s] << ","
                  << num(tr.A_hat[s]) << "," << tr.a[s] << "," << num(tr.a_hat[s]) << "\n";
        }
    }
    return 0;
}

int cmd_replay(const std::string& events_path, const std::string& scenario, const std::string& estimator,
               std::optional<Slot> horizon, const std::string& resume, const std::string& checkpoint,
               const fs::path& out)
{
    const ValidatedScenario sc = validate(load_scenario(scenario));
    const ScenarioConfig& c = sc.config();
    const EstimatorKind kind = parse_estimator(estimator);
    const std::vector<UlEvent> events = read_events(events_path);

    Slot last = 0;
    for (const UlEvent& e : events) {
        if (e.stream < 1 || e.stream > c.n_streams)
            throw ValidationError("event for unknown stream " + std::to_string(e.stream));
        last = std::max(last, e.t);
    }
    const Slot T = horizon.value_or(last);

    std::vector<std::unique_ptr<StreamEstimator>> est;
    for (std::size_t i = 0; i < c.streams.size(); ++i) {
        if (kind == EstimatorKind::oracle)
            est.push_back(std::make_unique<OracleEstimator>(c.streams[i].params, sc.pmf(i)));
        else
            est.push_back(std::make_unique<LcEstimator>(c.streams[i].params));
    }
    Slot start = 1;
    if (!resume.empty()) {
        if (kind != EstimatorKind::lc)
            throw ValidationError("resume is supported for the lc estimator only");
        const Checkpoint cp = read_checkpoint(resume);
        for (const auto& [id, st] : cp.streams) {
            if (id < 1 || id > c.n_streams)
                throw ValidationError("checkpoint names unknown stream " + std::to_string(id));
            static_cast<LcEstimator&>(*est[static_cast<std::size_t>(id - 1)]).restore(st.first, st.second);
        }
        start = cp.t + 1;
    }

    std::map<std::pair<Slot, StreamId>, UlEvent> by_slot;
    for (const UlEvent& e : events)
        by_slot[{e.t, e.stream}] = e;

    auto f = open_out(out, "estimates.csv");
    f << "t,stream_id,gamma_u_hat,gamma_d_hat,a_hat,A_hat\n";
    for (Slot t = start; t <= T; ++t) {
        for (std::size_t i = 0; i < est.size(); ++i) {
            const StreamId id = static_cast<StreamId>(i + 1);
            est[i]->prepare(t);
            const auto it = by_slot.find({t, id});
            const EstimatorState& e = it == by_slot.end()
                                          ? est[i]->observe(t, false, false, std::nullopt)
                                          : est[i]->observe(t, it->second.scheduled, it->second.c_u,
                                                            it->second.packet_id);
            f << t << "," << id << "," << num(e.gamma_u_hat) << "," << num(e.gamma_d_hat) << "," << num(e.a_hat)
              << "," << num(e.A_hat) << "\n";
        }
    }
    if (!checkpoint.empty()) {
        json j{{"t", T}, {"estimator", estimator_name(kind)}, {"streams", json::array()}};
        for (std::size_t i = 0; i < est.size(); ++i)
            j["streams"].push_back(json{{"id", static_cast<int>(i + 1)},
                                        {"observation", observation_json(est[i]->observation())},
                                        {"estimate", estimate_json(est[i]->estimate())}});
        std::ofstream cf(checkpoint, std::ios::binary);
        if (!cf)
            throw std::runtime_error("cannot write " + checkpoint);
        cf << j.dump(2) << "\n";
    }
    std::cout << "replayed " << events.size() << " events over slots " << start << ".." << T << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Age-of-Information estimation and scheduling simulator"};
    app.require_subcommand(1);

    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::string seeds;
    std::string out = "out";
    std::string policy;
    std::optional<Slot> horizon;
    double budget_ms = 1.0;
    Slot decimate = 1;
    bool events = false;

    auto* run_cmd = app.add_subcommand("run", "Run one scenario and write metrics and paths");
    run_cmd->add_option("--scenario", scenario, "Scenario JSON")->required();
    run_cmd->add_option("--seed", seed, "Override the scenario seed");
    run_cmd->add_option("--out", out, "Output directory");
    run_cmd->add_option("--policy", policy, "Override the policy");
    run_cmd->add_option("--horizon", horizon, "Override the horizon");
    run_cmd->add_option("--decimate", decimate, "Sample path stride")->check(CLI::PositiveNumber);
    run_cmd->add_flag("--events", events, "Also write events.csv for replay");

    std::string spec_path;
    std::string param;
    std::string values;
    std::string kinds;
    auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one parameter across policies and seeds");
    sweep_cmd->add_option("--spec", spec_path, "Sweep JSON");
    sweep_cmd->add_option("--scenario", scenario, "Base scenario (without --spec)");
    sweep_cmd->add_option("--param", param, "mean_interval|lambda|p_dest|theta|n_streams|k_budget");
    sweep_cmd->add_option("--values", values, "Comma-separated values");
    sweep_cmd->add_option("--policy", policy, "Comma-separated policies");
    sweep_cmd->add_option("--seeds", seeds, "Seed range A..B or list");
    sweep_cmd->add_option("--horizon", horizon, "Horizon per run");
    sweep_cmd->add_option("--traffic-kinds", kinds, "Comma-separated traffic kinds to cross with the values");
    sweep_cmd->add_option("--out", out, "Output directory");

    std::string n_list = "5,10,15,20,25,30,35,40,45,50";
    int reps = 3;
    Slot bench_horizon = 2000;
    std::string pipelines = "mw_lc,mw_enf,noop";
    auto* bench_cmd = app.add_subcommand("bench", "Per-slot estimation+scheduling runtime versus N");
    bench_cmd->add_option("--n", n_list, "Comma-separated network sizes");
    bench_cmd->add_option("--reps", reps, "Runs per row")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--horizon", bench_horizon, "Slots per run")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--budget-ms", budget_ms, "Per-slot budget in milliseconds");
    bench_cmd->add_option("--pipeline", pipelines, "Comma-separated pipelines (mw_lc, mw_enf, noop, ...)");
    bench_cmd->add_option("--scenario", scenario, "Template scenario whose streams are cycled to size N");
    bench_cmd->add_option("--out", out, "Output directory");

    auto* study_cmd = app.add_subcommand("estimator-study", "Estimator NMSE and drop-instant alignment");
    study_cmd->add_option("--scenario", scenario, "Scenario JSON")->required();
    study_cmd->add_option("--policy", policy, "Comma-separated policies");
    study_cmd->add_option("--seed", seed, "Override the scenario seed");
    study_cmd->add_option("--horizon", horizon, "Override the horizon");
    study_cmd->add_option("--decimate", decimate, "Path stride")->check(CLI::PositiveNumber);
    study_cmd->add_option("--out", out, "Output directory");

    std::string events_path;
    std::string estimator = "lc";
    std::string resume;
    std::string checkpoint;
    auto* replay_cmd = app.add_subcommand("replay", "Replay a UL event log through an estimator");
    replay_cmd->add_option("--events", events_path, "CSV t,stream_id,scheduled,c_u,packet_id")->required();
    replay_cmd->add_option("--scenario", scenario, "Scenario providing stream parameters")->required();
    replay_cmd->add_option("--estimator", estimator, "lc|oracle");
    replay_cmd->add_option("--horizon", horizon, "Last slot to emit (default: last event)");
    replay_cmd->add_option("--resume", resume, "Checkpoint JSON to start from");
    replay_cmd->add_option("--checkpoint", checkpoint, "Write the final estimator state to this JSON file");
    replay_cmd->add_option("--out", out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*run_cmd)
            return cmd_run(scenario, seed, out, policy, horizon, decimate, events);
        if (*sweep_cmd)
            return cmd_sweep(spec_path, scenario, param, values, policy, seeds, horizon, kinds, out);
        if (*bench_cmd)
            return cmd_bench(n_list, reps, bench_horizon, budget_ms, pipelines, scenario, out);
        if (*study_cmd)
            return cmd_estimator_study(scenario, policy, seed, horizon, decimate, out);
        if (*replay_cmd)
            return cmd_replay(events_path, scenario, estimator, horizon, resume, checkpoint, out);
    } catch (const ScenarioNotFound& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNotFound;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ScenarioParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitFailure;
}
