#include "aoisched/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

namespace aoisched {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

std::string trim(std::string s)
{
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

bool in_unit(double p) { return p >= 0.0 && p <= 1.0; }

} // namespace

ChannelTable ChannelTable::load_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("channel table not found: " + path.string());

    ChannelTable table;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#')
            continue;
        if (!header_seen) {
            header_seen = true;
            if (line != "stream_id,frame_index,p_u")
                throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                                      ": expected header stream_id,frame_index,p_u");
            continue;
        }
        std::stringstream ss(line);
        std::string a, b, c;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c))
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected 3 columns");
        try {
            std::size_t used = 0;
            const int stream = std::stoi(a, &used);
            const long long frame = std::stoll(b);
            const double p = std::stod(c);
            if (!in_unit(p))
                throw ValidationError("p_u out of range");
            table.set(stream, frame, p);
        } catch (const std::logic_error&) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
        } catch (const ValidationError& e) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return table;
}

void ChannelTable::set(StreamId stream, Slot frame, double p_u)
{
    if (frame < 1)
        throw ValidationError("frame_index out of range");
    auto& row = rows_[stream];
    if (row.size() < static_cast<std::size_t>(frame))
        row.resize(static_cast<std::size_t>(frame), std::nan(""));
    row[static_cast<std::size_t>(frame - 1)] = p_u;
}

double ChannelTable::at(StreamId stream, Slot frame) const
{
    const auto it = rows_.find(stream);
    if (it == rows_.end() || frame < 1 || static_cast<std::size_t>(frame) > it->second.size() ||
        std::isnan(it->second[static_cast<std::size_t>(frame - 1)]))
        throw ValidationError("channel table exhausted");
    return it->second[static_cast<std::size_t>(frame - 1)];
}

bool ChannelTable::covers(StreamId stream, Slot last_frame) const
{
    const auto it = rows_.find(stream);
    if (it == rows_.end() || static_cast<std::size_t>(last_frame) > it->second.size())
        return false;
    return std::none_of(it->second.begin(), it->second.begin() + last_frame, [](double p) { return std::isnan(p); });
}

double ChannelTable::mean(StreamId stream) const
{
    const auto it = rows_.find(stream);
    if (it == rows_.end())
        throw ValidationError("channel table has no rows for stream " + std::to_string(stream));
    double sum = 0.0;
    std::size_t n = 0;
    for (double p : it->second) {
        if (!std::isnan(p)) {
            sum += p;
            ++n;
        }
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

void check_channel_model(const UplinkChannelModel& model, StreamId id)
{
    const std::string where = "stream " + std::to_string(id) + ": ";
    std::visit(overloaded{
                   [&](const ConstantChannel& m) {
                       if (!in_unit(m.p))
                           throw ValidationError(where + "channel p out of range");
                   },
                   [&](const FrameIidUniformChannel& m) {
                       if (!in_unit(m.p_min) || !in_unit(m.p_max) || m.p_min > m.p_max)
                           throw ValidationError(where + "channel p_min/p_max out of range");
                   },
                   [&](const FrameIidDiscreteChannel& m) {
                       if (m.support.empty() || m.support.size() != m.mass.size())
                           throw ValidationError(where + "channel support/mass size mismatch");
                       if (!std::all_of(m.support.begin(), m.support.end(), in_unit))
                           throw ValidationError(where + "channel support out of range");
                       if (std::any_of(m.mass.begin(), m.mass.end(), [](double w) { return !(w >= 0.0); }))
                           throw ValidationError(where + "channel mass negative");
                       const double total = std::accumulate(m.mass.begin(), m.mass.end(), 0.0);
                       if (std::abs(total - 1.0) > 1e-9)
                           throw ValidationError(where + "channel mass does not sum to 1");
                   },
                   [&](const EmpiricalChannel& m) {
                       if (!m.table)
                           throw ValidationError(where + "empirical channel has no table");
                   },
               },
               model);
}

double reliability(const UplinkChannelModel& model, StreamId stream, Slot t, Slot frame_len, std::uint64_t seed)
{
    if (t < 1)
        throw ContractViolation("reliability requires t >= 1");
    const Slot frame = frame_index(t, frame_len);
    const auto draw = [&] {
        return keyed_uniform(seed, StreamPurpose::reliability, static_cast<std::uint64_t>(stream),
                             static_cast<std::uint64_t>(frame));
    };
    return std::visit(overloaded{
                          [](const ConstantChannel& m) { return m.p; },
                          [&](const FrameIidUniformChannel& m) { return m.p_min + (m.p_max - m.p_min) * draw(); },
                          [&](const FrameIidDiscreteChannel& m) {
                              const double u = draw();
                              double acc = 0.0;
                              for (std::size_t k = 0; k < m.support.size(); ++k) {
                                  acc += m.mass[k];
                                  if (u < acc)
                                      return m.support[k];
                              }
                              return m.support.back();
                          },
                          [&](const EmpiricalChannel& m) { return m.table->at(stream, frame); },
                      },
                      model);
}

double mean_reliability(const UplinkChannelModel& model, StreamId stream)
{
    return std::visit(overloaded{
                          [](const ConstantChannel& m) { return m.p; },
                          [](const FrameIidUniformChannel& m) { return 0.5 * (m.p_min + m.p_max); },
                          [](const FrameIidDiscreteChannel& m) {
                              return std::inner_product(m.support.begin(), m.support.end(), m.mass.begin(), 0.0);
                          },
                          [&](const EmpiricalChannel& m) { return m.table->mean(stream); },
                      },
                      model);
}

void ForwardingPipeline::enqueue(StreamId stream, Slot gen_time, Slot send_slot, double p_dest, Slot theta,
                                 double uniform)
{
    ForwardingEntry entry{stream, gen_time, send_slot, send_slot + theta, uniform < p_dest};
    by_slot_[entry.delivery_slot].push_back(entry);
    ++size_;
    ++enqueued_;
}

std::vector<Delivery> ForwardingPipeline::drain_deliveries(Slot t)
{
    std::vector<Delivery> out;
    auto it = by_slot_.begin();
    while (it != by_slot_.end() && it->first <= t) {
        auto& entries = it->second;
        std::stable_sort(entries.begin(), entries.end(),
                         [](const ForwardingEntry& a, const ForwardingEntry& b) { return a.stream < b.stream; });
        for (const auto& e : entries) {
            if (e.delivered)
                out.push_back({e.stream, e.gen_time});
        }
        size_ -= entries.size();
        drained_ += entries.size();
        it = by_slot_.erase(it);
    }
    return out;
}

} // namespace aoisched
