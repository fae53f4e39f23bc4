#include <skrm/experiment.hpp>

#include <atomic>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include <skrm/betree.hpp>
#include <skrm/device_store.hpp>
#include <skrm/error.hpp>
#include <skrm/workload.hpp>

namespace skrm {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <class T>
T parse_uint(std::string_view key, std::string_view v) {
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw ConfigError("'" + std::string(key) + "' expects an unsigned integer, got '" +
                          std::string(v) + "'");
    }
    return out;
}

bool parse_switch(std::string_view key, std::string_view v) {
    if (v == "on" || v == "true" || v == "1" || v == "yes") {
        return true;
    }
    if (v == "off" || v == "false" || v == "0" || v == "no") {
        return false;
    }
    throw ConfigError("'" + std::string(key) + "' expects on or off, got '" + std::string(v) + "'");
}

double parse_number(std::string_view v) {
    const std::string s(v);
    std::size_t used = 0;
    const double d = std::stod(s, &used);
    if (used != s.size()) {
        throw std::invalid_argument("trailing characters in '" + s + "'");
    }
    return d;
}

const char* on_off(bool b) { return b ? "on" : "off"; }

} // namespace

// ---------------------------------------------------------------------------

std::uint32_t ExperimentConfig::effective_arena_capacity() const {
    if (arena_capacity != 0) {
        return arena_capacity;
    }
    return static_cast<std::uint32_t>(next_pow2(std::max<std::uint64_t>(entries, 1)));
}

DeviceConfig ExperimentConfig::device_config() const {
    DeviceConfig dc;
    dc.geometry.word_bits = word_bits();
    dc.geometry.interport_bits = interport_bits.value_or(word_bits());
    dc.geometry.ports_per_track = ports_per_track.value_or(2 * node_slots);
    dc.shift_policy = shift_policy;
    dc.cost = cost;
    return dc;
}

void ExperimentConfig::validate() const {
    WorkloadSpec::preset(workload, 1, 1, seed);
    if (word_bytes == 0 || word_bits() > Word::kMaxBits) {
        throw ConfigError("word_bytes must be in 1.." + std::to_string(Word::kMaxBits / 8));
    }
    if (strategy == Strategy::Pw && mapping == Mapping::BitInterleaved) {
        throw ConfigError("pw needs the word-based mapping");
    }
    if (strategy == Strategy::Pw && parallel_ports) {
        throw ConfigError("pw cannot be combined with parallel port updates");
    }
    device_config().validate();
    BeTreeConfig tc;
    tc.word_bits = word_bits();
    tc.node_slots = node_slots;
    tc.pivot_slots = pivot_slots;
    tc.encoding = encoding;
    tc.arena_capacity = effective_arena_capacity();
    tc.validate();
}

ExperimentConfig ExperimentConfig::with_toggles(Strategy s, bool enc, bool parallel) const {
    auto c = *this;
    c.strategy = s;
    c.encoding = enc;
    c.parallel_ports = parallel;
    return c;
}

ExperimentConfig ExperimentConfig::baseline() const {
    return with_toggles(Strategy::Naive, false, false);
}

bool ExperimentConfig::is_baseline() const {
    return strategy == Strategy::Naive && !encoding && !parallel_ports;
}

bool ExperimentConfig::apply(std::string_view key, std::string_view value) {
    if (key == "workload") {
        if (value.size() != 1) {
            throw ConfigError("workload must be one of a..f");
        }
        workload = value[0];
    } else if (key == "mapping") {
        mapping = parse_mapping(value);
    } else if (key == "strategy") {
        strategy = parse_strategy(value);
    } else if (key == "encoding") {
        encoding = parse_switch(key, value);
    } else if (key == "parallel_ports" || key == "parallel_updates") {
        parallel_ports = parse_switch(key, value);
    } else if (key == "word_bytes") {
        word_bytes = parse_uint<std::uint32_t>(key, value);
    } else if (key == "word_bits") {
        const auto bits = parse_uint<std::uint32_t>(key, value);
        if (bits % 8 != 0) {
            throw ConfigError("word_bits must be a whole number of bytes");
        }
        word_bytes = bits / 8;
    } else if (key == "entries") {
        entries = parse_uint<std::uint64_t>(key, value);
    } else if (key == "ops") {
        ops = parse_uint<std::uint64_t>(key, value);
    } else if (key == "seed") {
        seed = parse_uint<std::uint64_t>(key, value);
    } else if (key == "node_slots") {
        node_slots = parse_uint<std::uint32_t>(key, value);
    } else if (key == "pivot_slots") {
        pivot_slots = parse_uint<std::uint32_t>(key, value);
    } else if (key == "arena_capacity") {
        arena_capacity = parse_uint<std::uint32_t>(key, value);
    } else if (key == "group_capacity") {
        group_capacity = parse_uint<std::uint32_t>(key, value);
    } else if (key == "count_new_detect") {
        count_new_detect = parse_switch(key, value);
    } else if (key == "ports_per_track") {
        ports_per_track = parse_uint<std::uint32_t>(key, value);
    } else if (key == "interport_bits") {
        interport_bits = parse_uint<std::uint32_t>(key, value);
    } else {
        DeviceConfig dc;
        dc.shift_policy = shift_policy;
        dc.cost = cost;
        if (!dc.apply(key, value)) {
            return false;
        }
        shift_policy = dc.shift_policy;
        cost = dc.cost;
    }
    return true;
}

ExperimentConfig ExperimentConfig::parse(std::istream& in, ExperimentConfig base) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view s = line;
        if (const auto hash = s.find('#'); hash != std::string_view::npos) {
            s = s.substr(0, hash);
        }
        s = trim(s);
        if (s.empty()) {
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        }
        const auto key = trim(s.substr(0, eq));
        if (!base.apply(key, trim(s.substr(eq + 1)))) {
            throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" +
                              std::string(key) + "'");
        }
    }
    base.validate();
    return base;
}

ExperimentConfig ExperimentConfig::load(const std::string& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open configuration file " + path);
    }
    return parse(in, std::move(base));
}

ExperimentConfig ExperimentConfig::parse(std::istream& in) { return parse(in, ExperimentConfig{}); }

ExperimentConfig ExperimentConfig::load(const std::string& path) { return load(path, ExperimentConfig{}); }

// ---------------------------------------------------------------------------

MetricsReport run_single(const ExperimentConfig& config) {
    config.validate();
    const auto ws = config.word_bits();
    Device device(config.device_config());
    LayoutOptions lo;
    lo.pair_slots = config.node_slots;
    lo.group_capacity = config.group_capacity;
    Layout layout(device, config.mapping, lo);
    StoreOptions so;
    so.strategy = config.strategy;
    so.parallel_ports = config.parallel_ports;
    so.write.count_new_detect = config.count_new_detect;
    DeviceStore store(layout, so);

    BeTreeConfig tc;
    tc.word_bits = ws;
    tc.node_slots = config.node_slots;
    tc.pivot_slots = config.pivot_slots;
    tc.encoding = config.encoding;
    tc.arena_capacity = config.effective_arena_capacity();
    BeTree tree(tc, store);

    const auto spec = WorkloadSpec::preset(config.workload, config.entries, config.op_count(), config.seed);
    const auto stream = generate(spec);

    MetricsReport r;
    std::unordered_map<std::uint64_t, std::uint64_t> oracle;
    oracle.reserve(stream.load.size() + stream.run.size());
    for (const auto& op : stream.load) {
        tree.upsert(key_for(op.key_seq, ws), value_for(op.value_seed, ws));
        oracle[op.key_seq] = op.value_seed;
    }
    for (const auto& op : stream.run) {
        const auto key = key_for(op.key_seq, ws);
        if (op.type == OpType::Read) {
            ++r.reads;
            const auto got = tree.query(key);
            const auto it = oracle.find(op.key_seq);
            const bool ok = it == oracle.end() ? !got.has_value()
                                               : got.has_value() && *got == value_for(it->second, ws);
            if (!ok) {
                ++r.read_mismatches;
            }
        } else {
            tree.upsert(key, value_for(op.value_seed, ws));
            oracle[op.key_seq] = op.value_seed;
        }
    }

    r.workload = std::string(1, config.workload);
    r.mapping = config.mapping;
    r.strategy = config.strategy;
    r.encoding = config.encoding;
    r.parallel_updates = config.parallel_ports;
    r.word_bytes = config.word_bytes;
    r.entries = config.entries;
    r.counters = device.counters();
    const auto cost = accumulate_cost(r.counters, config.cost);
    r.energy_fj = cost.energy_fj;
    r.latency_ns = cost.latency_ns;
    r.ops = stream.run.size();
    r.probe_mismatches = store.probe_mismatches();
    r.kv_writes = tree.stats().kv_writes;
    r.tree_height = tree.height();
    r.index_bits = tree.payload_bits();
    r.arena_high_water = tree.arena() ? tree.arena()->high_water() : 0;
    r.tracks = device.track_count();
    return r;
}

double reduction_pct(double baseline, double value) {
    if (baseline == 0.0) {
        return 0.0;
    }
    return 100.0 * (baseline - value) / baseline;
}

void normalize(std::vector<MetricsReport>& reports) {
    if (reports.empty()) {
        return;
    }
    const auto base_latency = reports.front().latency_ns;
    const auto base_energy = reports.front().energy_fj;
    for (auto& r : reports) {
        r.latency_reduction_pct = reduction_pct(base_latency, r.latency_ns);
        r.energy_reduction_pct = reduction_pct(base_energy, r.energy_fj);
    }
}

std::vector<MetricsReport> run_experiment(const ExperimentConfig& config) {
    config.validate();
    std::vector<MetricsReport> out;
    out.push_back(run_single(config.baseline()));
    if (!config.is_baseline()) {
        out.push_back(run_single(config));
    }
    normalize(out);
    return out;
}

std::vector<MetricsReport> run_ablation(const ExperimentConfig& config) {
    const auto fast = Strategy::Bcw;
    std::vector<MetricsReport> out;
    out.push_back(run_single(config.baseline()));
    out.push_back(run_single(config.with_toggles(fast, false, true)));
    out.push_back(run_single(config.with_toggles(Strategy::Naive, true, false)));
    out.push_back(run_single(config.with_toggles(fast, true, true)));
    normalize(out);
    return out;
}

std::vector<MetricsReport> run_sweep(const ExperimentConfig& config, const SweepOptions& opts) {
    std::vector<ExperimentConfig> points;
    for (auto w : opts.workloads) {
        for (auto e : opts.entries) {
            for (auto b : opts.word_bytes) {
                auto c = config;
                c.workload = w;
                c.entries = e;
                c.word_bytes = b;
                c.ops.reset();
                c.validate();
                points.push_back(c);
            }
        }
    }
    std::vector<std::vector<MetricsReport>> results(points.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(points.size());
    auto worker = [&] {
        for (auto i = next++; i < points.size(); i = next++) {
            try {
                results[i] = run_experiment(points[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    unsigned threads = opts.threads != 0 ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(points.size(), 1)));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    for (auto& t : pool) {
        t.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    std::vector<MetricsReport> out;
    for (auto& r : results) {
        out.insert(out.end(), r.begin(), r.end());
    }
    return out;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols{
        "workload", "mapping", "strategy", "encoding", "parallel_updates", "word_bytes", "entries",
        "shift", "detect", "remove", "inject", "energy_fJ", "latency_ns",
        "latency_reduction_pct", "energy_reduction_pct"};
    return cols;
}

std::string to_csv(const std::vector<MetricsReport>& reports) {
    std::ostringstream out;
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    const auto& cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        out << (i ? "," : "") << cols[i];
    }
    out << '\n';
    for (const auto& r : reports) {
        out << r.workload << ',' << to_string(r.mapping) << ',' << to_string(r.strategy) << ','
            << on_off(r.encoding) << ',' << on_off(r.parallel_updates) << ',' << r.word_bytes << ','
            << r.entries << ',' << r.counters.shift_count << ',' << r.counters.detect_count << ','
            << r.counters.remove_count << ',' << r.counters.inject_count << ',' << r.energy_fj << ','
            << r.latency_ns << ',' << r.latency_reduction_pct << ',' << r.energy_reduction_pct << '\n';
    }
    return out.str();
}

std::vector<MetricsReport> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw IoError("empty CSV");
    }
    std::vector<std::string> header;
    {
        std::istringstream h(line);
        std::string cell;
        while (std::getline(h, cell, ',')) {
            header.emplace_back(trim(cell));
        }
    }
    if (header != csv_columns()) {
        throw IoError("unexpected CSV header");
    }
    std::vector<MetricsReport> out;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::istringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) {
            cells.emplace_back(trim(cell));
        }
        if (cells.size() != header.size()) {
            throw IoError("CSV row has " + std::to_string(cells.size()) + " cells");
        }
        MetricsReport r;
        try {
            r.workload = cells[0];
            r.mapping = parse_mapping(cells[1]);
            r.strategy = parse_strategy(cells[2]);
            r.encoding = parse_switch("encoding", cells[3]);
            r.parallel_updates = parse_switch("parallel_updates", cells[4]);
            r.word_bytes = parse_uint<std::uint32_t>("word_bytes", cells[5]);
            r.entries = parse_uint<std::uint64_t>("entries", cells[6]);
            r.counters.shift_count = parse_uint<std::uint64_t>("shift", cells[7]);
            r.counters.detect_count = parse_uint<std::uint64_t>("detect", cells[8]);
            r.counters.remove_count = parse_uint<std::uint64_t>("remove", cells[9]);
            r.counters.inject_count = parse_uint<std::uint64_t>("inject", cells[10]);
            r.energy_fj = parse_number(cells[11]);
            r.latency_ns = parse_number(cells[12]);
            r.latency_reduction_pct = parse_number(cells[13]);
            r.energy_reduction_pct = parse_number(cells[14]);
        } catch (const ConfigError& e) {
            throw IoError(std::string("bad CSV row: ") + e.what());
        } catch (const std::invalid_argument& e) {
            throw IoError(std::string("bad CSV row: ") + e.what());
        }
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

nlohmann::json to_json_record(const MetricsReport& r) {
    nlohmann::json j;
    j["workload"] = r.workload;
    j["mapping"] = std::string(to_string(r.mapping));
    j["strategy"] = std::string(to_string(r.strategy));
    j["encoding"] = on_off(r.encoding);
    j["parallel_updates"] = on_off(r.parallel_updates);
    j["word_bytes"] = r.word_bytes;
    j["entries"] = r.entries;
    j["shift"] = r.counters.shift_count;
    j["detect"] = r.counters.detect_count;
    j["remove"] = r.counters.remove_count;
    j["inject"] = r.counters.inject_count;
    j["energy_fJ"] = r.energy_fj;
    j["latency_ns"] = r.latency_ns;
    j["latency_reduction_pct"] = r.latency_reduction_pct;
    j["energy_reduction_pct"] = r.energy_reduction_pct;
    j["latency_steps"] = r.counters.latency_steps;
    j["ops"] = r.ops;
    j["reads"] = r.reads;
    j["read_mismatches"] = r.read_mismatches;
    j["probe_mismatches"] = r.probe_mismatches;
    j["kv_writes"] = r.kv_writes;
    j["tree_height"] = r.tree_height;
    j["index_bits"] = r.index_bits;
    j["arena_high_water"] = r.arena_high_water;
    j["tracks"] = r.tracks;
    return j;
}

} // namespace

std::string to_json(const std::vector<MetricsReport>& reports, int indent) {
    auto arr = nlohmann::json::array();
    for (const auto& r : reports) {
        arr.push_back(to_json_record(r));
    }
    return arr.dump(indent);
}

std::vector<MetricsReport> parse_json(const std::string& text) {
    std::vector<MetricsReport> out;
    try {
        const auto doc = nlohmann::json::parse(text);
        for (const auto& j : doc) {
            MetricsReport r;
            r.workload = j.at("workload").get<std::string>();
            r.mapping = parse_mapping(j.at("mapping").get<std::string>());
            r.strategy = parse_strategy(j.at("strategy").get<std::string>());
            r.encoding = parse_switch("encoding", j.at("encoding").get<std::string>());
            r.parallel_updates = parse_switch("parallel_updates", j.at("parallel_updates").get<std::string>());
            r.word_bytes = j.at("word_bytes").get<std::uint32_t>();
            r.entries = j.at("entries").get<std::uint64_t>();
            r.counters.shift_count = j.at("shift").get<std::uint64_t>();
            r.counters.detect_count = j.at("detect").get<std::uint64_t>();
            r.counters.remove_count = j.at("remove").get<std::uint64_t>();
            r.counters.inject_count = j.at("inject").get<std::uint64_t>();
            r.counters.latency_steps = j.at("latency_steps").get<std::array<std::uint64_t, 16>>();
            r.energy_fj = j.at("energy_fJ").get<double>();
            r.latency_ns = j.at("latency_ns").get<double>();
            r.latency_reduction_pct = j.at("latency_reduction_pct").get<double>();
            r.energy_reduction_pct = j.at("energy_reduction_pct").get<double>();
            r.ops = j.value("ops", std::uint64_t{0});
            r.reads = j.value("reads", std::uint64_t{0});
            r.read_mismatches = j.value("read_mismatches", std::uint64_t{0});
            r.probe_mismatches = j.value("probe_mismatches", std::uint64_t{0});
            r.kv_writes = j.value("kv_writes", std::uint64_t{0});
            r.tree_height = j.value("tree_height", 0u);
            r.index_bits = j.value("index_bits", 0u);
            r.arena_high_water = j.value("arena_high_water", 0u);
            r.tracks = j.value("tracks", std::size_t{0});
            out.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("bad JSON report: ") + e.what());
    }
    return out;
}

void emit(const std::vector<MetricsReport>& reports, std::string_view format, const std::string& path) {
    std::string body;
    if (format == "csv") {
        body = to_csv(reports);
    } else if (format == "json") {
        body = to_json(reports) + "\n";
    } else {
        throw ConfigError("format must be csv or json, got '" + std::string(format) + "'");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path + " for writing");
    }
    out << body;
    if (!out) {
        throw IoError("failed writing " + path);
    }
}

} // namespace skrm
