#include <skrm/device.hpp>

#include <charconv>
#include <fstream>
#include <istream>
#include <string>

#include <skrm/error.hpp>

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

std::uint32_t parse_u32(std::string_view key, std::string_view v) {
    std::uint32_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw ConfigError("'" + std::string(key) + "' expects an unsigned integer, got '" +
                          std::string(v) + "'");
    }
    return out;
}

double parse_double(std::string_view key, std::string_view v) {
    try {
        std::size_t used = 0;
        const std::string s(v);
        const double d = std::stod(s, &used);
        if (used != s.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return d;
    } catch (const std::exception&) {
        throw ConfigError("'" + std::string(key) + "' expects a number, got '" + std::string(v) +
                          "'");
    }
}

} // namespace

std::string_view to_string(ShiftPolicy p) {
    return p == ShiftPolicy::Lazy ? "lazy" : "eager";
}

ShiftPolicy parse_shift_policy(std::string_view s) {
    if (s == "lazy") {
        return ShiftPolicy::Lazy;
    }
    if (s == "eager") {
        return ShiftPolicy::Eager;
    }
    throw ConfigError("shift_policy must be lazy or eager, got '" + std::string(s) + "'");
}

void Geometry::validate() const {
    if (word_bits == 0 || ports_per_track == 0 || interport_bits == 0) {
        throw ConfigError("word_bits, ports_per_track and interport_bits must be positive");
    }
    if (interport_bits % word_bits != 0) {
        throw ConfigError("interport_bits must be a multiple of word_bits");
    }
}

bool DeviceConfig::apply(std::string_view key, std::string_view value) {
    if (key == "word_bits") {
        geometry.word_bits = parse_u32(key, value);
    } else if (key == "ports_per_track") {
        geometry.ports_per_track = parse_u32(key, value);
    } else if (key == "interport_bits") {
        geometry.interport_bits = parse_u32(key, value);
    } else if (key == "shift_policy") {
        shift_policy = parse_shift_policy(value);
    } else if (key == "detect_energy_fj") {
        cost.detect_energy_fj = parse_double(key, value);
    } else if (key == "shift_energy_fj") {
        cost.shift_energy_fj = parse_double(key, value);
    } else if (key == "remove_energy_fj") {
        cost.remove_energy_fj = parse_double(key, value);
    } else if (key == "inject_energy_fj") {
        cost.inject_energy_fj = parse_double(key, value);
    } else if (key == "detect_latency_ns") {
        cost.detect_latency_ns = parse_double(key, value);
    } else if (key == "shift_latency_ns") {
        cost.shift_latency_ns = parse_double(key, value);
    } else if (key == "remove_latency_ns") {
        cost.remove_latency_ns = parse_double(key, value);
    } else if (key == "inject_latency_ns") {
        cost.inject_latency_ns = parse_double(key, value);
    } else {
        return false;
    }
    return true;
}

DeviceConfig DeviceConfig::parse(std::istream& in) {
    DeviceConfig cfg;
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
        const auto value = trim(s.substr(eq + 1));
        if (!cfg.apply(key, value)) {
            throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" +
                              std::string(key) + "'");
        }
    }
    cfg.validate();
    return cfg;
}

DeviceConfig DeviceConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open configuration file " + path);
    }
    return parse(in);
}

void DeviceConfig::validate() const {
    geometry.validate();
    cost.validate();
}

} // namespace skrm
