#pragma once

#include <cstdint>

#include <skrm/betree.hpp>
#include <skrm/layout.hpp>
#include <skrm/write_strategy.hpp>

namespace skrm {

struct StoreOptions {
    Strategy strategy = Strategy::Naive;
    /// Write all changed pairs of a node under one set of shifts; otherwise
    /// each pair slot (each word for pw) is written on its own.
    bool parallel_ports = false;
    /// Strategy for arena values, written once per upsert.
    Strategy arena_strategy = Strategy::Dcw;
    WriteOptions write;
};

/// NodeStore backed by a simulated device.
class DeviceStore : public NodeStore {
public:
    DeviceStore(Layout& layout, StoreOptions options);

    void commit(RegionId region, const NodeImage& before, const NodeImage& after) override;
    Word probe(RegionId region, std::uint32_t word_index, const Word& expected) override;
    void arena_write(std::uint32_t slot, const Word& previous, const Word& value) override;
    Word arena_read(std::uint32_t slot, const Word& expected) override;

    const StoreOptions& options() const { return options_; }
    /// Probes whose device contents differed from the controller copy.
    std::uint64_t probe_mismatches() const { return mismatches_; }

private:
    RegionId arena_region(std::uint32_t slot, std::uint32_t& word) const;

    Layout& layout_;
    StoreOptions options_;
    std::uint64_t mismatches_ = 0;
};

} // namespace skrm
