#include "aoisched/scenario_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace aoisched {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

/// Error context: origin plus a JSON-pointer-like path.
struct Ctx {
    std::string origin;
    std::string path;

    Ctx at(const std::string& key) const { return {origin, path + "/" + key}; }
    Ctx at(std::size_t index) const { return {origin, path + "/" + std::to_string(index)}; }

    [[noreturn]] void fail(const std::string& what) const
    {
        throw ScenarioParseError(origin + ": " + (path.empty() ? "/" : path) + ": " + what);
    }
};

void require_object(const json& j, const Ctx& ctx, std::initializer_list<const char*> allowed)
{
    if (!j.is_object())
        ctx.fail("expected an object");
    for (const auto& item : j.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; });
        if (!known)
            ctx.fail("unknown key '" + item.key() + "'");
    }
}

double get_number(const json& j, const Ctx& ctx)
{
    if (!j.is_number())
        ctx.fail("expected a number");
    return j.get<double>();
}

std::int64_t get_integer(const json& j, const Ctx& ctx)
{
    if (j.is_number_integer())
        return j.get<std::int64_t>();
    if (j.is_number_float()) {
        const double v = j.get<double>();
        if (std::floor(v) == v && std::abs(v) < 9e15)
            return static_cast<std::int64_t>(v);
    }
    ctx.fail("expected an integer");
}

std::uint64_t get_unsigned(const json& j, const Ctx& ctx)
{
    if (j.is_number_unsigned())
        return j.get<std::uint64_t>();
    const std::int64_t v = get_integer(j, ctx);
    if (v < 0)
        ctx.fail("expected a non-negative integer");
    return static_cast<std::uint64_t>(v);
}

std::string get_string(const json& j, const Ctx& ctx)
{
    if (!j.is_string())
        ctx.fail("expected a string");
    return j.get<std::string>();
}

std::vector<double> get_number_array(const json& j, const Ctx& ctx)
{
    if (!j.is_array())
        ctx.fail("expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(get_number(j[i], ctx.at(i)));
    return out;
}

const json& required(const json& j, const char* key, const Ctx& ctx)
{
    if (!j.contains(key))
        ctx.fail(std::string("missing key '") + key + "'");
    return j.at(key);
}

json parse_text(const std::string& text, const std::string& origin)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t end = std::min<std::size_t>(e.byte, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n');
        throw ScenarioParseError(origin + ":" + std::to_string(line) + ": invalid JSON: " + e.what());
    }
}

std::string read_file(const fs::path& path, const char* what)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ScenarioNotFound(std::string(what) + " not found: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

GenerationModel parse_traffic(const json& j, const Ctx& ctx)
{
    if (!j.is_object())
        ctx.fail("expected an object");
    const std::string kind = get_string(required(j, "kind", ctx), ctx.at("kind"));
    if (kind == "bernoulli") {
        require_object(j, ctx, {"kind", "lambda"});
        return BernoulliTraffic{get_number(required(j, "lambda", ctx), ctx.at("lambda"))};
    }
    if (kind == "periodic") {
        require_object(j, ctx, {"kind", "period"});
        return PeriodicTraffic{get_integer(required(j, "period", ctx), ctx.at("period"))};
    }
    if (kind == "uniform_integer") {
        require_object(j, ctx, {"kind", "lo", "hi"});
        return UniformIntegerTraffic{get_integer(required(j, "lo", ctx), ctx.at("lo")),
                                     get_integer(required(j, "hi", ctx), ctx.at("hi"))};
    }
    ctx.at("kind").fail("unknown traffic kind '" + kind + "'");
}

UplinkChannelModel parse_channel(const json& j, const Ctx& ctx, const fs::path& base_dir)
{
    if (!j.is_object())
        ctx.fail("expected an object");
    const std::string kind = get_string(required(j, "kind", ctx), ctx.at("kind"));
    if (kind == "constant") {
        require_object(j, ctx, {"kind", "p"});
        return ConstantChannel{get_number(required(j, "p", ctx), ctx.at("p"))};
    }
    if (kind == "frame_iid") {
        if (j.contains("support")) {
            require_object(j, ctx, {"kind", "support", "mass"});
            return FrameIidDiscreteChannel{get_number_array(j.at("support"), ctx.at("support")),
                                           get_number_array(required(j, "mass", ctx), ctx.at("mass"))};
        }
        require_object(j, ctx, {"kind", "p_min", "p_max"});
        return FrameIidUniformChannel{get_number(required(j, "p_min", ctx), ctx.at("p_min")),
                                      get_number(required(j, "p_max", ctx), ctx.at("p_max"))};
    }
    if (kind == "empirical") {
        require_object(j, ctx, {"kind", "path"});
        fs::path path = get_string(required(j, "path", ctx), ctx.at("path"));
        if (path.is_relative())
            path = base_dir / path;
        if (!fs::exists(path))
            throw ScenarioNotFound("channel table not found: " + path.string());
        return EmpiricalChannel{std::make_shared<const ChannelTable>(ChannelTable::load_csv(path)), path};
    }
    ctx.at("kind").fail("unknown channel kind '" + kind + "'");
}

InterGenerationPmf parse_pmf(const json& j, const Ctx& ctx)
{
    require_object(j, ctx, {"support", "mass"});
    std::vector<Slot> support;
    const json& sj = required(j, "support", ctx);
    if (!sj.is_array())
        ctx.at("support").fail("expected an array");
    for (std::size_t i = 0; i < sj.size(); ++i)
        support.push_back(get_integer(sj[i], ctx.at("support").at(i)));
    try {
        return InterGenerationPmf::table(support, get_number_array(required(j, "mass", ctx), ctx.at("mass")));
    } catch (const ValidationError& e) {
        ctx.fail(e.what());
    }
}

/// Stream fields shared by `stream_defaults` and each `streams` entry.
void merge_stream_fields(json& into, const json& from)
{
    for (const auto& item : from.items())
        into[item.key()] = item.value();
}

StreamConfig parse_stream(const json& merged, const Ctx& ctx, const fs::path& base_dir)
{
    require_object(merged, ctx, {"id", "lambda", "p_dest", "theta", "alpha", "beta", "traffic", "channel", "pmf"});
    StreamConfig s;
    s.params.id = static_cast<StreamId>(get_integer(required(merged, "id", ctx), ctx.at("id")));
    s.traffic = parse_traffic(required(merged, "traffic", ctx), ctx.at("traffic"));
    s.channel = parse_channel(required(merged, "channel", ctx), ctx.at("channel"), base_dir);
    s.params.lambda = merged.contains("lambda") ? get_number(merged.at("lambda"), ctx.at("lambda"))
                                                : effective_rate(s.traffic);
    if (merged.contains("p_dest"))
        s.params.p_dest = get_number(merged.at("p_dest"), ctx.at("p_dest"));
    if (merged.contains("theta"))
        s.params.theta = get_integer(merged.at("theta"), ctx.at("theta"));
    if (merged.contains("alpha"))
        s.params.alpha = get_number(merged.at("alpha"), ctx.at("alpha"));
    s.params.beta = merged.contains("beta") ? get_number(merged.at("beta"), ctx.at("beta")) : s.params.alpha;
    if (merged.contains("pmf"))
        s.pmf = parse_pmf(merged.at("pmf"), ctx.at("pmf"));
    return s;
}

ScenarioConfig parse_scenario_json(const json& j, const fs::path& base_dir, const Ctx& ctx)
{
    require_object(j, ctx,
                   {"description", "n_streams", "k_budget", "horizon", "seed", "frame_len", "policy", "estimator",
                    "pf_time_constant", "stream_defaults", "streams"});
    ScenarioConfig c;
    if (j.contains("description"))
        c.description = get_string(j.at("description"), ctx.at("description"));
    c.k_budget = static_cast<int>(get_integer(required(j, "k_budget", ctx), ctx.at("k_budget")));
    c.horizon = get_integer(required(j, "horizon", ctx), ctx.at("horizon"));
    if (j.contains("seed"))
        c.seed = get_unsigned(j.at("seed"), ctx.at("seed"));
    if (j.contains("frame_len"))
        c.frame_len = get_integer(j.at("frame_len"), ctx.at("frame_len"));
    if (j.contains("policy")) {
        try {
            c.policy = parse_policy(get_string(j.at("policy"), ctx.at("policy")));
        } catch (const ValidationError& e) {
            ctx.at("policy").fail(e.what());
        }
    }
    if (j.contains("estimator")) {
        try {
            c.estimator = parse_estimator(get_string(j.at("estimator"), ctx.at("estimator")));
        } catch (const ValidationError& e) {
            ctx.at("estimator").fail(e.what());
        }
    }
    if (j.contains("pf_time_constant"))
        c.pf_time_constant = get_number(j.at("pf_time_constant"), ctx.at("pf_time_constant"));

    json defaults = json::object();
    if (j.contains("stream_defaults")) {
        const Ctx dctx = ctx.at("stream_defaults");
        require_object(j.at("stream_defaults"), dctx,
                       {"lambda", "p_dest", "theta", "alpha", "beta", "traffic", "channel", "pmf"});
        defaults = j.at("stream_defaults");
    }
    const json& streams = required(j, "streams", ctx);
    if (!streams.is_array())
        ctx.at("streams").fail("expected an array");
    for (std::size_t i = 0; i < streams.size(); ++i) {
        const Ctx sctx = ctx.at("streams").at(i);
        if (!streams[i].is_object())
            sctx.fail("expected an object");
        json merged = defaults;
        merge_stream_fields(merged, streams[i]);
        c.streams.push_back(parse_stream(merged, sctx, base_dir));
    }
    c.n_streams = j.contains("n_streams") ? static_cast<int>(get_integer(j.at("n_streams"), ctx.at("n_streams")))
                                          : static_cast<int>(c.streams.size());
    return c;
}

json traffic_to_json(const GenerationModel& m)
{
    return std::visit(overloaded{
                          [](const BernoulliTraffic& b) { return json{{"kind", "bernoulli"}, {"lambda", b.lambda}}; },
                          [](const PeriodicTraffic& p) { return json{{"kind", "periodic"}, {"period", p.period}}; },
                          [](const UniformIntegerTraffic& u) {
                              return json{{"kind", "uniform_integer"}, {"lo", u.lo}, {"hi", u.hi}};
                          },
                      },
                      m);
}

json channel_to_json(const UplinkChannelModel& m)
{
    return std::visit(overloaded{
                          [](const ConstantChannel& c) { return json{{"kind", "constant"}, {"p", c.p}}; },
                          [](const FrameIidUniformChannel& c) {
                              return json{{"kind", "frame_iid"}, {"p_min", c.p_min}, {"p_max", c.p_max}};
                          },
                          [](const FrameIidDiscreteChannel& c) {
                              return json{{"kind", "frame_iid"}, {"support", c.support}, {"mass", c.mass}};
                          },
                          [](const EmpiricalChannel& c) {
                              return json{{"kind", "empirical"}, {"path", c.source.string()}};
                          },
                      },
                      m);
}

} // namespace

ScenarioConfig parse_scenario(const std::string& text, const fs::path& base_dir, const std::string& origin)
{
    return parse_scenario_json(parse_text(text, origin), base_dir, Ctx{origin, ""});
}

ScenarioConfig load_scenario(const fs::path& path)
{
    const std::string text = read_file(path, "scenario");
    return parse_scenario(text, path.parent_path(), path.string());
}

std::string scenario_to_json(const ScenarioConfig& c)
{
    json j;
    j["description"] = c.description;
    j["n_streams"] = c.n_streams;
    j["k_budget"] = c.k_budget;
    j["horizon"] = c.horizon;
    j["seed"] = c.seed;
    j["frame_len"] = c.frame_len;
    j["policy"] = policy_name(c.policy);
    if (c.estimator)
        j["estimator"] = estimator_name(*c.estimator);
    j["pf_time_constant"] = c.pf_time_constant;
    j["streams"] = json::array();
    for (const StreamConfig& s : c.streams) {
        json sj{{"id", s.params.id},       {"lambda", s.params.lambda}, {"p_dest", s.params.p_dest},
                {"theta", s.params.theta}, {"alpha", s.params.alpha},   {"beta", s.params.beta},
                {"traffic", traffic_to_json(s.traffic)}, {"channel", channel_to_json(s.channel)}};
        if (s.pmf) {
            std::vector<Slot> support;
            std::vector<double> mass;
            const auto& table = s.pmf->table_mass();
            for (std::size_t x = 0; x < table.size(); ++x) {
                if (table[x] > 0.0) {
                    support.push_back(static_cast<Slot>(x + 1));
                    mass.push_back(table[x]);
                }
            }
            sj["pmf"] = json{{"support", support}, {"mass", mass}};
        }
        j["streams"].push_back(std::move(sj));
    }
    return j.dump(2);
}

std::string sweep_param_name(SweepParam p)
{
    switch (p) {
    case SweepParam::mean_interval: return "mean_interval";
    case SweepParam::lambda: return "lambda";
    case SweepParam::p_dest: return "p_dest";
    case SweepParam::theta: return "theta";
    case SweepParam::n_streams: return "n_streams";
    case SweepParam::k_budget: return "k_budget";
    }
    return "unknown";
}

SweepParam parse_sweep_param(const std::string& name)
{
    for (SweepParam p : {SweepParam::mean_interval, SweepParam::lambda, SweepParam::p_dest, SweepParam::theta,
                         SweepParam::n_streams, SweepParam::k_budget}) {
        if (sweep_param_name(p) == name)
            return p;
    }
    throw ValidationError("unknown sweep parameter '" + name + "'");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text)
{
    std::vector<std::uint64_t> out;
    const auto dots = text.find("..");
    try {
        if (dots != std::string::npos) {
            const std::uint64_t a = std::stoull(text.substr(0, dots));
            const std::uint64_t b = std::stoull(text.substr(dots + 2));
            if (b < a)
                throw ValidationError("empty seed range '" + text + "'");
            for (std::uint64_t s = a; s <= b; ++s)
                out.push_back(s);
            return out;
        }
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ','))
            out.push_back(std::stoull(item));
    } catch (const std::logic_error&) {
        throw ValidationError("invalid seed list '" + text + "'");
    }
    if (out.empty())
        throw ValidationError("empty seed list");
    return out;
}

SweepSpec parse_sweep(const std::string& text, const fs::path& base_dir, const std::string& origin)
{
    const json j = parse_text(text, origin);
    const Ctx ctx{origin, ""};
    require_object(j, ctx, {"base", "param", "values", "policies", "seeds", "horizon", "traffic_kinds"});

    SweepSpec spec;
    fs::path base = get_string(required(j, "base", ctx), ctx.at("base"));
    if (base.is_relative())
        base = base_dir / base;
    spec.base = load_scenario(base);
    try {
        spec.param = parse_sweep_param(get_string(required(j, "param", ctx), ctx.at("param")));
    } catch (const ValidationError& e) {
        ctx.at("param").fail(e.what());
    }
    spec.values = get_number_array(required(j, "values", ctx), ctx.at("values"));

    const json& pj = required(j, "policies", ctx);
    if (!pj.is_array())
        ctx.at("policies").fail("expected an array");
    for (std::size_t i = 0; i < pj.size(); ++i) {
        try {
            spec.policies.push_back(parse_policy(get_string(pj[i], ctx.at("policies").at(i))));
        } catch (const ValidationError& e) {
            ctx.at("policies").at(i).fail(e.what());
        }
    }

    if (j.contains("seeds")) {
        const json& sj = j.at("seeds");
        const Ctx sctx = ctx.at("seeds");
        if (sj.is_object()) {
            require_object(sj, sctx, {"from", "to"});
            const std::uint64_t a = get_unsigned(required(sj, "from", sctx), sctx.at("from"));
            const std::uint64_t b = get_unsigned(required(sj, "to", sctx), sctx.at("to"));
            for (std::uint64_t s = a; s <= b; ++s)
                spec.seeds.push_back(s);
        } else if (sj.is_array()) {
            for (std::size_t i = 0; i < sj.size(); ++i)
                spec.seeds.push_back(get_unsigned(sj[i], sctx.at(i)));
        } else {
            sctx.fail("expected an array or {\"from\", \"to\"}");
        }
    } else {
        for (std::uint64_t s = 1; s <= 10; ++s)
            spec.seeds.push_back(s);
    }
    spec.horizon = j.contains("horizon") ? get_integer(j.at("horizon"), ctx.at("horizon")) : Slot{100000};

    if (j.contains("traffic_kinds")) {
        const json& kj = j.at("traffic_kinds");
        if (!kj.is_array())
            ctx.at("traffic_kinds").fail("expected an array");
        for (std::size_t i = 0; i < kj.size(); ++i)
            spec.traffic_kinds.push_back(get_string(kj[i], ctx.at("traffic_kinds").at(i)));
    }
    return spec;
}

SweepSpec load_sweep(const fs::path& path)
{
    const std::string text = read_file(path, "sweep spec");
    return parse_sweep(text, path.parent_path(), path.string());
}

void check_sweep(const SweepSpec& spec)
{
    if (spec.values.empty())
        throw ValidationError("sweep value list is empty");
    if (spec.policies.empty())
        throw ValidationError("sweep policy list is empty");
    if (spec.seeds.empty())
        throw ValidationError("sweep seed list is empty");
    if (spec.horizon && *spec.horizon < 1)
        throw ValidationError("horizon out of range");
    for (const std::string& kind : spec.traffic_kinds) {
        if (kind != "bernoulli" && kind != "periodic" && kind != "uniform_integer")
            throw ValidationError("unknown traffic kind '" + kind + "'");
    }
}

ScenarioConfig apply_sweep_value(ScenarioConfig config, SweepParam param, double value)
{
    const auto as_integer = [&](const char* what) {
        if (std::floor(value) != value)
            throw ValidationError(std::string(what) + " must be an integer");
        return static_cast<std::int64_t>(value);
    };
    switch (param) {
    case SweepParam::mean_interval:
    case SweepParam::lambda: {
        if (!(value > 0.0))
            throw ValidationError(sweep_param_name(param) + " out of range");
        const double mean = param == SweepParam::lambda ? 1.0 / value : value;
        for (StreamConfig& s : config.streams) {
            s.traffic = with_mean_interval(s.traffic, mean);
            s.params.lambda = effective_rate(s.traffic);
            s.pmf.reset();
        }
        break;
    }
    case SweepParam::p_dest:
        for (StreamConfig& s : config.streams)
            s.params.p_dest = value;
        break;
    case SweepParam::theta: {
        const Slot theta = as_integer("theta");
        for (StreamConfig& s : config.streams)
            s.params.theta = theta;
        break;
    }
    case SweepParam::n_streams: {
        const auto n = as_integer("n_streams");
        if (n < 1 || config.streams.empty())
            throw ValidationError("n_streams out of range");
        std::vector<StreamConfig> base = config.streams;
        std::sort(base.begin(), base.end(),
                  [](const StreamConfig& a, const StreamConfig& b) { return a.params.id < b.params.id; });
        config.streams.clear();
        for (std::int64_t i = 0; i < n; ++i) {
            StreamConfig s = base[static_cast<std::size_t>(i) % base.size()];
            s.params.id = static_cast<StreamId>(i + 1);
            config.streams.push_back(std::move(s));
        }
        config.n_streams = static_cast<int>(n);
        break;
    }
    case SweepParam::k_budget:
        config.k_budget = static_cast<int>(as_integer("k_budget"));
        break;
    }
    return config;
}

} // namespace aoisched
