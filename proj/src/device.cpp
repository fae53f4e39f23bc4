#include <skrm/device.hpp>

#include <algorithm>
#include <bit>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include <skrm/error.hpp>

namespace skrm {

std::string_view to_string(Primitive p) {
    switch (p) {
        case Primitive::Detect: return "detect";
        case Primitive::Shift:  return "shift";
        case Primitive::Remove: return "remove";
        case Primitive::Inject: return "inject";
    }
    return "unknown";
}

double CostModel::energy(Primitive p) const {
    switch (p) {
        case Primitive::Detect: return detect_energy_fj;
        case Primitive::Shift:  return shift_energy_fj;
        case Primitive::Remove: return remove_energy_fj;
        case Primitive::Inject: return inject_energy_fj;
    }
    return 0.0;
}

double CostModel::latency(Primitive p) const {
    switch (p) {
        case Primitive::Detect: return detect_latency_ns;
        case Primitive::Shift:  return shift_latency_ns;
        case Primitive::Remove: return remove_latency_ns;
        case Primitive::Inject: return inject_latency_ns;
    }
    return 0.0;
}

double CostModel::step_latency(std::uint8_t mask) const {
    double worst = 0.0;
    for (auto p : {Primitive::Detect, Primitive::Shift, Primitive::Remove, Primitive::Inject}) {
        if (mask & mask_of(p)) {
            worst = std::max(worst, latency(p));
        }
    }
    return worst;
}

void CostModel::validate() const {
    for (auto p : {Primitive::Detect, Primitive::Shift, Primitive::Remove, Primitive::Inject}) {
        if (!(energy(p) > 0.0) || !(latency(p) > 0.0)) {
            throw ConfigError("unit cost of " + std::string(to_string(p)) + " must be positive");
        }
    }
}

std::uint64_t OpCounters::count(Primitive p) const {
    switch (p) {
        case Primitive::Detect: return detect_count;
        case Primitive::Shift:  return shift_count;
        case Primitive::Remove: return remove_count;
        case Primitive::Inject: return inject_count;
    }
    return 0;
}

std::uint64_t OpCounters::total_steps() const {
    std::uint64_t n = 0;
    for (auto s : latency_steps) {
        n += s;
    }
    return n;
}

std::uint64_t OpCounters::steps_with(Primitive p) const {
    std::uint64_t n = 0;
    for (std::size_t m = 0; m < latency_steps.size(); ++m) {
        if (m & mask_of(p)) {
            n += latency_steps[m];
        }
    }
    return n;
}

OpCounters& OpCounters::operator+=(const OpCounters& o) {
    shift_count += o.shift_count;
    detect_count += o.detect_count;
    remove_count += o.remove_count;
    inject_count += o.inject_count;
    for (std::size_t m = 0; m < latency_steps.size(); ++m) {
        latency_steps[m] += o.latency_steps[m];
    }
    return *this;
}

OpCounters operator-(const OpCounters& a, const OpCounters& b) {
    OpCounters d;
    d.shift_count = a.shift_count - b.shift_count;
    d.detect_count = a.detect_count - b.detect_count;
    d.remove_count = a.remove_count - b.remove_count;
    d.inject_count = a.inject_count - b.inject_count;
    for (std::size_t m = 0; m < d.latency_steps.size(); ++m) {
        d.latency_steps[m] = a.latency_steps[m] - b.latency_steps[m];
    }
    return d;
}

Cost accumulate_cost(const OpCounters& c, const CostModel& model) {
    Cost out;
    out.energy_fj = static_cast<double>(c.detect_count) * model.detect_energy_fj +
                    static_cast<double>(c.shift_count) * model.shift_energy_fj +
                    static_cast<double>(c.remove_count) * model.remove_energy_fj +
                    static_cast<double>(c.inject_count) * model.inject_energy_fj;
    for (std::size_t m = 1; m < c.latency_steps.size(); ++m) {
        if (c.latency_steps[m] != 0) {
            out.latency_ns += static_cast<double>(c.latency_steps[m]) *
                              model.step_latency(static_cast<std::uint8_t>(m));
        }
    }
    return out;
}

std::string counters_json(const OpCounters& c, const CostModel& model) {
    const auto cost = accumulate_cost(c, model);
    nlohmann::json j;
    j["shift"] = c.shift_count;
    j["detect"] = c.detect_count;
    j["remove"] = c.remove_count;
    j["inject"] = c.inject_count;
    j["energy_fJ"] = cost.energy_fj;
    j["latency_ns"] = cost.latency_ns;
    return j.dump();
}

// ---------------------------------------------------------------------------

TrackState::TrackState(std::uint32_t ports, std::uint32_t interport_bits)
    : ports_(ports), interport_(interport_bits) {
    if (ports == 0 || interport_bits == 0) {
        throw ConfigError("a track needs at least one port and a positive interport distance");
    }
    const std::size_t physical_len = std::size_t{ports} * interport_bits + 2u * interport_bits;
    cells_.assign((physical_len + 63) / 64, 0);
}

std::size_t TrackState::physical(std::int64_t data_index) const {
    const std::int64_t lo = -static_cast<std::int64_t>(interport_);
    const std::int64_t hi = static_cast<std::int64_t>(length_bits()) + interport_;
    if (data_index < lo || data_index >= hi) {
        throw BoundaryViolation("cell " + std::to_string(data_index) + " is outside the track");
    }
    return static_cast<std::size_t>(data_index + interport_);
}

bool TrackState::cell(std::int64_t data_index) const {
    const auto p = physical(data_index);
    return (cells_[p / 64] >> (p % 64)) & 1u;
}

void TrackState::set_cell(std::int64_t data_index, bool on) {
    const auto p = physical(data_index);
    const std::uint64_t m = std::uint64_t{1} << (p % 64);
    if (on) {
        cells_[p / 64] |= m;
    } else {
        cells_[p / 64] &= ~m;
    }
}

std::uint64_t TrackState::population() const {
    std::uint64_t n = 0;
    for (auto w : cells_) {
        n += static_cast<std::uint64_t>(std::popcount(w));
    }
    return n;
}

// ---------------------------------------------------------------------------

Device::Device(DeviceConfig config) : config_(std::move(config)) {
    config_.validate();
}

TrackId Device::add_track() {
    return add_track(config_.geometry.ports_per_track);
}

TrackId Device::add_track(std::uint32_t ports) {
    tracks_.emplace_back(ports, config_.geometry.interport_bits);
    return static_cast<TrackId>(tracks_.size() - 1);
}

TrackId Device::add_tracks(std::uint32_t count, std::uint32_t ports) {
    if (count == 0) {
        throw ConfigError("add_tracks needs a positive count");
    }
    const auto first = static_cast<TrackId>(tracks_.size());
    for (std::uint32_t i = 0; i < count; ++i) {
        tracks_.emplace_back(ports, config_.geometry.interport_bits);
    }
    return first;
}

const TrackState& Device::track(TrackId id) const {
    if (id >= tracks_.size()) {
        throw LookupError("unknown track " + std::to_string(id));
    }
    return tracks_[id];
}

TrackState& Device::mutable_track(TrackId id) {
    if (id >= tracks_.size()) {
        throw LookupError("unknown track " + std::to_string(id));
    }
    return tracks_[id];
}

std::int64_t Device::port_cell(const TrackState& t, std::uint32_t port) const {
    if (port >= t.ports()) {
        throw PortOutOfRange("port " + std::to_string(port) + " out of range (" +
                             std::to_string(t.ports()) + " ports)");
    }
    return static_cast<std::int64_t>(t.port_position(port)) + t.offset();
}

void Device::record(Primitive p, std::uint64_t n) {
    if (n == 0) {
        return;
    }
    switch (p) {
        case Primitive::Detect: counters_.detect_count += n; break;
        case Primitive::Shift:  counters_.shift_count += n; break;
        case Primitive::Remove: counters_.remove_count += n; break;
        case Primitive::Inject: counters_.inject_count += n; break;
    }
    if (step_depth_ > 0) {
        step_mask_ |= mask_of(p);
    } else {
        counters_.latency_steps[mask_of(p)] += 1;
    }
}

void Device::open_step() {
    if (step_depth_++ == 0) {
        step_mask_ = 0;
    }
}

void Device::close_step() {
    if (--step_depth_ == 0 && step_mask_ != 0) {
        counters_.latency_steps[step_mask_] += 1;
        step_mask_ = 0;
    }
}

void Device::move(TrackState& t, TrackId id, Direction dir, std::uint32_t steps) {
    const std::int64_t next = dir == Direction::Right ? t.offset_ + steps : t.offset_ - steps;
    if (std::llabs(next) > static_cast<std::int64_t>(t.interport_)) {
        throw BoundaryViolation("shifting track " + std::to_string(id) + " to offset " +
                                std::to_string(next) + " overruns its overflow region");
    }
    t.offset_ = next;
}

void Device::shift(std::span<const TrackId> ids, Direction dir, std::uint32_t steps) {
    if (steps == 0 || ids.empty()) {
        return;
    }
    if (step_depth_ > 0) {
        throw std::logic_error("shift cannot be part of a parallel detect/write step");
    }
    for (auto id : ids) {
        move(mutable_track(id), id, dir, steps);
    }
    counters_.shift_count += std::uint64_t{steps} * ids.size();
    counters_.latency_steps[mask_of(Primitive::Shift)] += steps;
}

void Device::shift(TrackId id, Direction dir, std::uint32_t steps) {
    shift(std::span<const TrackId>(&id, 1), dir, steps);
}

void Device::shift_range(TrackId first, std::uint32_t count, Direction dir, std::uint32_t steps) {
    if (steps == 0 || count == 0) {
        return;
    }
    if (step_depth_ > 0) {
        throw std::logic_error("shift cannot be part of a parallel detect/write step");
    }
    for (TrackId id = first; id < first + count; ++id) {
        move(mutable_track(id), id, dir, steps);
    }
    counters_.shift_count += std::uint64_t{steps} * count;
    counters_.latency_steps[mask_of(Primitive::Shift)] += steps;
}

bool Device::detect(TrackId id, std::uint32_t port) {
    const auto& t = track(id);
    const bool bit = t.cell(port_cell(t, port));
    record(Primitive::Detect, 1);
    return bit;
}

void Device::inject(TrackId id, std::uint32_t port) {
    auto& t = mutable_track(id);
    const auto c = port_cell(t, port);
    if (t.cell(c)) {
        throw DoubleInjection("inject on occupied cell " + std::to_string(c) + " of track " +
                              std::to_string(id));
    }
    t.set_cell(c, true);
    record(Primitive::Inject, 1);
}

bool Device::remove(TrackId id, std::uint32_t port) {
    auto& t = mutable_track(id);
    const auto c = port_cell(t, port);
    if (!t.cell(c)) {
        return false;
    }
    t.set_cell(c, false);
    record(Primitive::Remove, 1);
    return true;
}

std::uint32_t Device::align(std::span<const TrackId> ids, std::int64_t target) {
    if (ids.empty()) {
        return 0;
    }
    const std::int64_t current = track(ids.front()).offset();
    for (auto id : ids) {
        if (track(id).offset() != current) {
            throw AlignmentError("tracks aligned together must share one offset");
        }
    }
    const auto steps = static_cast<std::uint32_t>(std::llabs(target - current));
    shift(ids, target > current ? Direction::Right : Direction::Left, steps);
    return steps;
}

std::uint32_t Device::align(TrackId id, std::int64_t target) {
    return align(std::span<const TrackId>(&id, 1), target);
}

std::uint32_t Device::align_range(TrackId first, std::uint32_t count, std::int64_t target) {
    if (count == 0) {
        return 0;
    }
    const std::int64_t current = track(first).offset();
    for (TrackId id = first; id < first + count; ++id) {
        if (track(id).offset() != current) {
            throw AlignmentError("tracks of one group must share one offset");
        }
    }
    const auto steps = static_cast<std::uint32_t>(std::llabs(target - current));
    shift_range(first, count, target > current ? Direction::Right : Direction::Left, steps);
    return steps;
}

void Device::settle(TrackId id) {
    if (config_.shift_policy == ShiftPolicy::Eager) {
        align(id, 0);
    }
}

void Device::settle_range(TrackId first, std::uint32_t count) {
    if (config_.shift_policy == ShiftPolicy::Eager) {
        align_range(first, count, 0);
    }
}

void Device::charge_reposition(TrackId id, std::uint32_t steps) {
    (void)track(id);
    if (steps == 0) {
        return;
    }
    counters_.shift_count += steps;
    counters_.latency_steps[mask_of(Primitive::Shift)] += steps;
}

void Device::permute(TrackId id, std::span<const std::int64_t> from,
                     std::span<const std::int64_t> to) {
    auto& t = mutable_track(id);
    if (from.size() != to.size()) {
        throw std::logic_error("permute needs matching source and target lists");
    }
    for (auto f : from) {
        if (!t.cell(f)) {
            throw std::logic_error("permute source holds no skyrmion");
        }
        t.set_cell(f, false);
    }
    for (auto d : to) {
        if (t.cell(d)) {
            throw std::logic_error("permute target is occupied");
        }
        t.set_cell(d, true);
    }
}

bool Device::peek(TrackId id, std::int64_t data_index) const {
    return track(id).cell(data_index);
}

bool Device::peek_port(TrackId id, std::uint32_t port) const {
    const auto& t = track(id);
    return t.cell(port_cell(t, port));
}

} // namespace skrm
