#pragma once

// Experiment configuration: a key = value file, with command-line overrides
// merged on top before parsing. Recognized keys:
//
//   loss            square | bernoulli | <registered name>
//   base            kt | running-mean | <registered name>   (default by loss)
//   scheme          lin | log | sub
//   sub_a sub_b sub_c   period ladder parameters (default 1, 0.5, 1.5)
//   horizon         T
//   generator       piecewise-bernoulli | piecewise-gaussian-clipped | adversarial-alternating
//   segments        explicit plan "len:param, len:param, ..."
//   segment_count   equal-length plan with S segments (used when segments is absent)
//   segment_params  parameters cycled over the equal-length plan
//   sigma           gaussian noise level
//   seed            64-bit seed
//   mode            lazy | eager | both
//   out             output directory
//
// Keys prefixed with "sweep." hold comma-separated value lists; a sweep runs
// the cartesian product of those lists over the remaining keys.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mixdyn/errors.hpp"
#include "mixdyn/mixture.hpp"
#include "mixdyn/schemes.hpp"

namespace mixdyn::harness {

using KeyValues = std::map<std::string, std::string>;

inline std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline KeyValues parse_key_values(std::istream& in) {
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw config_error("config line " + std::to_string(lineno) + ": expected key = value");
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (key.empty()) throw config_error("config line " + std::to_string(lineno) + ": empty key");
        kv[key] = value;
    }
    return kv;
}

inline KeyValues load_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    return parse_key_values(in);
}

enum class GeneratorKind { piecewise_bernoulli, piecewise_gaussian_clipped, adversarial_alternating };

inline const char* to_string(GeneratorKind g) {
    switch (g) {
        case GeneratorKind::piecewise_bernoulli: return "piecewise-bernoulli";
        case GeneratorKind::piecewise_gaussian_clipped: return "piecewise-gaussian-clipped";
        case GeneratorKind::adversarial_alternating: return "adversarial-alternating";
    }
    return "?";
}

enum class RunMode { lazy, eager, both };

inline const char* to_string(RunMode m) {
    switch (m) {
        case RunMode::lazy: return "lazy";
        case RunMode::eager: return "eager";
        case RunMode::both: return "both";
    }
    return "?";
}

struct SegmentPlan {
    Time length = 0;
    double param = 0.0;
};

struct ExperimentConfig {
    std::string loss = "bernoulli";
    std::string base;  // empty: default for the loss
    SchemeKind scheme = SchemeKind::sub;
    SubParams sub;
    Time horizon = 0;
    GeneratorKind generator = GeneratorKind::piecewise_bernoulli;
    std::vector<SegmentPlan> segments;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    RunMode mode = RunMode::lazy;
    std::string out = "out";

    std::string base_name() const {
        if (!base.empty()) return base;
        if (loss == "square") return "running-mean";
        if (loss == "bernoulli") return "kt";
        return loss;
    }

    std::vector<Time> segment_lengths() const {
        std::vector<Time> out;
        for (const auto& s : segments) out.push_back(s.length);
        return out;
    }
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw config_error("'" + key + "': expected a number, got '" + v + "'");
    }
}

template <class Int>
Int parse_int(const std::string& key, const std::string& v) {
    Int out{};
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || ptr != end) throw config_error("'" + key + "': expected an integer, got '" + v + "'");
    return out;
}

}  // namespace detail

inline SchemeKind parse_scheme(const std::string& v) {
    if (v == "lin") return SchemeKind::lin;
    if (v == "log") return SchemeKind::log;
    if (v == "sub") return SchemeKind::sub;
    throw config_error("unknown scheme '" + v + "' (expected lin, log or sub)");
}

inline GeneratorKind parse_generator(const std::string& v) {
    if (v == "piecewise-bernoulli") return GeneratorKind::piecewise_bernoulli;
    if (v == "piecewise-gaussian-clipped") return GeneratorKind::piecewise_gaussian_clipped;
    if (v == "adversarial-alternating") return GeneratorKind::adversarial_alternating;
    throw config_error("unknown generator '" + v + "'");
}

inline RunMode parse_mode(const std::string& v) {
    if (v == "lazy") return RunMode::lazy;
    if (v == "eager") return RunMode::eager;
    if (v == "both") return RunMode::both;
    throw config_error("unknown mode '" + v + "' (expected lazy, eager or both)");
}

inline void validate(const ExperimentConfig& c) {
    if (c.horizon < 1) throw config_error("horizon must be >= 1");
    if (c.segments.empty()) throw config_error("empty segment plan");
    Time total = 0;
    for (const auto& s : c.segments) {
        if (s.length < 1) throw config_error("segment lengths must be positive");
        total += s.length;
        switch (c.generator) {
            case GeneratorKind::piecewise_bernoulli:
                if (!(s.param >= 0.0 && s.param <= 1.0)) throw config_error("bernoulli rate outside [0, 1]");
                break;
            case GeneratorKind::piecewise_gaussian_clipped:
                if (!(s.param >= -1.0 && s.param <= 1.0)) throw config_error("gaussian mean outside [-1, 1]");
                break;
            case GeneratorKind::adversarial_alternating:
                if (!(s.param >= 0.0 && s.param <= 1.0)) throw config_error("alternating amplitude outside [0, 1]");
                break;
        }
    }
    if (total != c.horizon) throw config_error("segment lengths sum to " + std::to_string(total) +
                                               " but horizon is " + std::to_string(c.horizon));
    if (!(c.sigma >= 0.0)) throw config_error("sigma must be nonnegative");
    if (c.generator == GeneratorKind::piecewise_gaussian_clipped && c.loss == "bernoulli")
        throw config_error("gaussian outcomes are outside the bernoulli outcome domain");
    if (c.scheme == SchemeKind::sub && (!(c.sub.a > 0.0) || !(c.sub.b > 0.0) || !(c.sub.c > 1.0)))
        throw config_error("sub scheme requires a > 0, b > 0, c > 1");
}

inline ExperimentConfig parse_config(const KeyValues& kv) {
    ExperimentConfig c;
    std::vector<double> cycled;
    std::int64_t segment_count = 0;
    std::string explicit_segments;
    for (const auto& [key, value] : kv) {
        if (key.starts_with("sweep.")) continue;
        if (key == "loss") c.loss = value;
        else if (key == "base") c.base = value;
        else if (key == "scheme") c.scheme = parse_scheme(value);
        else if (key == "sub_a") c.sub.a = detail::parse_double(key, value);
        else if (key == "sub_b") c.sub.b = detail::parse_double(key, value);
        else if (key == "sub_c") c.sub.c = detail::parse_double(key, value);
        else if (key == "horizon") c.horizon = detail::parse_int<Time>(key, value);
        else if (key == "generator") c.generator = parse_generator(value);
        else if (key == "segments") explicit_segments = value;
        else if (key == "segment_count") segment_count = detail::parse_int<std::int64_t>(key, value);
        else if (key == "segment_params") {
            for (const auto& p : split(value, ',')) cycled.push_back(detail::parse_double(key, p));
        } else if (key == "sigma") c.sigma = detail::parse_double(key, value);
        else if (key == "seed") c.seed = detail::parse_int<std::uint64_t>(key, value);
        else if (key == "mode") c.mode = parse_mode(value);
        else if (key == "out") c.out = value;
        else throw config_error("unknown config key '" + key + "'");
    }

    if (!explicit_segments.empty()) {
        for (const auto& item : split(explicit_segments, ',')) {
            const auto colon = item.find(':');
            if (colon == std::string::npos) throw config_error("segment '" + item + "': expected length:param");
            c.segments.push_back({detail::parse_int<Time>("segments", trim(item.substr(0, colon))),
                                  detail::parse_double("segments", trim(item.substr(colon + 1)))});
        }
        if (c.horizon == 0)
            for (const auto& s : c.segments) c.horizon += s.length;
    } else {
        if (segment_count == 0) segment_count = 1;
        if (segment_count < 1) throw config_error("segment_count must be positive");
        if (c.horizon < segment_count) throw config_error("horizon must be at least segment_count");
        if (cycled.empty()) cycled.push_back(c.generator == GeneratorKind::piecewise_bernoulli ? 0.5 : 0.0);
        const Time len = c.horizon / segment_count;
        for (std::int64_t s = 0; s < segment_count; ++s) {
            const Time l = s + 1 == segment_count ? c.horizon - len * (segment_count - 1) : len;
            c.segments.push_back({l, cycled[static_cast<std::size_t>(s) % cycled.size()]});
        }
    }
    validate(c);
    return c;
}

// Cartesian product over every "sweep.<key>" list. Each entry keeps the
// overrides applied, so failures can be attributed.
inline std::vector<KeyValues> expand_sweep(const KeyValues& kv) {
    std::vector<KeyValues> out{KeyValues{}};
    for (const auto& [key, value] : kv)
        if (!key.starts_with("sweep.")) out.front()[key] = value;
    for (const auto& [key, value] : kv) {
        if (!key.starts_with("sweep.")) continue;
        const auto values = split(value, ',');
        if (values.empty()) throw config_error("'" + key + "' has no values");
        std::vector<KeyValues> next;
        for (const auto& base : out)
            for (const auto& v : values) {
                auto copy = base;
                copy[key.substr(6)] = v;
                next.push_back(std::move(copy));
            }
        out = std::move(next);
    }
    return out;
}

}  // namespace mixdyn::harness
