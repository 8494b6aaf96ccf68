#pragma once

// generate -> mixture -> evaluation, plus CSV / JSON emission and sweeps.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "json.hpp"
#include "mixdyn/base.hpp"
#include "mixdyn/eval.hpp"
#include "mixdyn/harness/config.hpp"
#include "mixdyn/harness/generator.hpp"
#include "mixdyn/losses.hpp"
#include "mixdyn/mixture.hpp"
#include "mixdyn/schemes.hpp"

namespace mixdyn::harness {

using LossVariant = std::variant<SquareLoss, BernoulliLogLoss, ExpConcaveLoss>;
using BaseVariant = std::variant<KtEstimator, RunningMean, CustomBase>;

// Name -> loss / base lookup. Custom families register here.
class Registry {
public:
    Registry() {
        losses_.emplace("square", SquareLoss{});
        losses_.emplace("bernoulli", BernoulliLogLoss{});
        bases_.emplace("kt", KtEstimator{});
        bases_.emplace("running-mean", RunningMean{});
    }

    void register_loss(const std::string& name, ExpConcaveLoss loss) { put(losses_, name, LossVariant{std::move(loss)}); }
    void register_base(const std::string& name, CustomBase base) { put(bases_, name, BaseVariant{std::move(base)}); }

    const LossVariant& loss(const std::string& name) const { return get(losses_, name, "loss"); }
    const BaseVariant& base(const std::string& name) const { return get(bases_, name, "base"); }

private:
    template <class M, class V>
    static void put(M& m, const std::string& name, V v) {
        if (name.empty()) throw config_error("registration requires a name");
        m.insert_or_assign(name, std::move(v));
    }
    template <class M>
    static const typename M::mapped_type& get(const M& m, const std::string& name, const char* what) {
        const auto it = m.find(name);
        if (it == m.end()) throw config_error(std::string("unknown ") + what + " '" + name + "'");
        return it->second;
    }

    std::map<std::string, LossVariant> losses_;
    std::map<std::string, BaseVariant> bases_;
};

inline Scheme make_scheme(const ExperimentConfig& c) {
    switch (c.scheme) {
        case SchemeKind::lin: return Scheme::lin();
        case SchemeKind::log: return Scheme::log();
        case SchemeKind::sub: return Scheme::sub(c.sub, c.horizon);
    }
    throw config_error("unknown scheme");
}

struct RunResult {
    ExperimentConfig config;
    std::vector<double> outcomes;
    Segmentation segmentation;
    std::vector<double> step_oracle_loss;
    RunTrace trace;  // lazy trace unless mode is eager
    RegretReport report;
    double alpha = 0.0;
    std::optional<double> max_divergence;  // mode both
    std::optional<bool> jt_match;          // mode both
    std::optional<std::int64_t> eager_work;
    std::optional<std::int64_t> lazy_work;

    bool agreement_ok() const {
        return !max_divergence || (*max_divergence <= 1e-12 && jt_match.value_or(false));
    }
};

template <MixableLoss L, BaseAlgorithm B>
RunResult run_with(const ExperimentConfig& config, const L& loss, const B& base, bool audit) {
    check_compatible(loss, base);
    RunResult r;
    r.config = config;
    r.alpha = loss.alpha();
    auto stream = generate(config);
    r.outcomes = std::move(stream.outcomes);
    for (double x : r.outcomes) check_outcome(loss, x);
    r.segmentation = oracle_comparators(loss, std::span<const double>(r.outcomes), std::span<const Time>(stream.segment_lengths));
    {
        std::size_t k = 0;
        for (std::size_t s = 0; s < r.segmentation.size(); ++s)
            for (Time i = 0; i < r.segmentation.lengths[s]; ++i, ++k)
                r.step_oracle_loss.push_back(loss.raw(r.segmentation.comparators[s], r.outcomes[k]));
    }
    const Scheme scheme = make_scheme(config);
    const std::span<const double> xs(r.outcomes);
    switch (config.mode) {
        case RunMode::lazy:
            r.trace = run_mixture(scheme, loss, base, xs, EngineMode::lazy, audit);
            r.lazy_work = r.trace.total_work;
            break;
        case RunMode::eager:
            r.trace = run_mixture(scheme, loss, base, xs, EngineMode::eager, audit);
            r.eager_work = r.trace.total_work;
            break;
        case RunMode::both: {
            r.trace = run_mixture(scheme, loss, base, xs, EngineMode::lazy, audit);
            const auto eager = run_mixture(scheme, loss, base, xs, EngineMode::eager, audit);
            double div = 0.0;
            bool same_jt = eager.steps.size() == r.trace.steps.size();
            for (std::size_t i = 0; same_jt && i < eager.steps.size(); ++i) {
                div = std::max(div, std::abs(eager.steps[i].prediction - r.trace.steps[i].prediction));
                same_jt = eager.steps[i].jt == r.trace.steps[i].jt;
            }
            r.max_divergence = div;
            r.jt_match = same_jt;
            r.lazy_work = r.trace.total_work;
            r.eager_work = eager.total_work;
            break;
        }
    }
    r.report = make_report(scheme, loss, base, xs, r.trace, r.segmentation);
    return r;
}

inline RunResult run(const ExperimentConfig& config, const Registry& registry = Registry{}, bool audit = false) {
    validate(config);
    const auto& loss = registry.loss(config.loss);
    const auto& base = registry.base(config.base_name());
    return std::visit([&](const auto& l, const auto& b) { return run_with(config, l, b, audit); }, loss, base);
}

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline const char* kTraceHeader =
    "t,outcome,prediction,step_loss,cum_loss,oracle_cum_loss,regret,jt_period,live_experts,created_experts";

inline std::string trace_csv(const RunResult& r) {
    std::ostringstream out;
    out << kTraceHeader << '\n';
    double cum = 0.0;
    double oracle = 0.0;
    for (std::size_t i = 0; i < r.trace.steps.size(); ++i) {
        const auto& s = r.trace.steps[i];
        cum += s.loss;
        oracle += r.step_oracle_loss[i];
        out << s.t << ',' << format_double(s.outcome) << ',' << format_double(s.prediction) << ','
            << format_double(s.loss) << ',' << format_double(cum) << ',' << format_double(oracle) << ','
            << format_double(cum - oracle) << ',' << (s.jt.infinite() ? std::string("inf") : std::to_string(s.jt.period))
            << ',' << s.live << ',' << s.created << '\n';
    }
    return out.str();
}

inline nlohmann::ordered_json summary_json(const RunResult& r) {
    nlohmann::ordered_json j;
    const auto& c = r.config;
    j["config"] = {{"loss", c.loss},
                   {"base", c.base_name()},
                   {"scheme", to_string(c.scheme)},
                   {"sub_a", c.sub.a},
                   {"sub_b", c.sub.b},
                   {"sub_c", c.sub.c},
                   {"horizon", c.horizon},
                   {"generator", to_string(c.generator)},
                   {"segments", c.segments.size()},
                   {"sigma", c.sigma},
                   {"seed", c.seed},
                   {"mode", to_string(c.mode)}};
    const auto& rep = r.report;
    j["report"] = {{"horizon", rep.horizon},
                   {"segments", rep.segments},
                   {"mixture_loss", rep.mixture_loss},
                   {"oracle_loss", rep.oracle_loss},
                   {"dynamic_regret", rep.dynamic_regret},
                   {"realized_switches", rep.realized_switches},
                   {"switch_bound", rep.switch_bound},
                   {"created_experts", rep.created_experts},
                   {"count_bound", rep.count_bound},
                   {"total_work", rep.total_work},
                   {"covering_path_loss", rep.path_loss},
                   {"covering_path_redundancy", rep.path_redundancy},
                   {"expert_regret", rep.expert_regret},
                   {"decomposition_holds", rep.decomposition_holds}};
    nlohmann::ordered_json seg = nlohmann::ordered_json::array();
    for (std::size_t s = 0; s < r.segmentation.size(); ++s)
        seg.push_back({{"length", r.segmentation.lengths[s]},
                       {"comparator", r.segmentation.comparators[s]},
                       {"oracle_loss", r.segmentation.losses[s]}});
    j["segmentation"] = seg;
    if (r.max_divergence) {
        j["agreement"] = {{"max_divergence", *r.max_divergence},
                          {"jt_match", r.jt_match.value_or(false)},
                          {"ok", r.agreement_ok()}};
    }
    if (r.lazy_work) j["lazy_work"] = *r.lazy_work;
    if (r.eager_work) j["eager_work"] = *r.eager_work;
    const auto& a = r.trace.audit;
    if (a.sources_checked > 0) {
        j["transition_audit"] = {{"sources_checked", a.sources_checked},
                                 {"row_sum_violations", a.row_sum_violations},
                                 {"max_conservation_error", a.max_conservation_error},
                                 {"dead_reset_violations", a.dead_reset_violations}};
    }
    return j;
}

// Writes to a sibling temporary and renames over the target.
inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw error("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw error("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

inline void write_outputs(const RunResult& r, const std::filesystem::path& dir) {
    write_atomically(dir / "trace.csv", trace_csv(r));
    write_atomically(dir / "summary.json", summary_json(r).dump(2) + "\n");
}

struct SweepRow {
    std::string scheme;
    std::string loss;
    Time horizon = 0;
    std::int64_t segments = 0;
    std::uint64_t seed = 0;
    double regret = 0.0;
    double per_switch_log = 0.0;     // regret / (S log(T/S))
    double per_switch_log2 = 0.0;    // regret / (S log^2(T/S))
    std::int64_t created = 0;
    std::int64_t work = 0;
    std::string status = "ok";
};

inline SweepRow sweep_row(const RunResult& r) {
    SweepRow row;
    row.scheme = to_string(r.config.scheme);
    row.loss = r.config.loss;
    row.horizon = r.report.horizon;
    row.segments = r.report.segments;
    row.seed = r.config.seed;
    row.regret = r.report.dynamic_regret;
    const double S = static_cast<double>(row.segments);
    const double lg = std::log(static_cast<double>(row.horizon) / S);
    row.per_switch_log = row.regret / (S * lg);
    row.per_switch_log2 = row.regret / (S * lg * lg);
    row.created = r.report.created_experts;
    row.work = r.report.total_work;
    return row;
}

// Runs every expanded configuration; invalid or failing runs become marked
// rows. Throws when no configuration survives validation.
inline std::vector<SweepRow> sweep(const std::vector<KeyValues>& configs, const Registry& registry = Registry{}) {
    if (configs.empty()) throw config_error("sweep: no configurations");
    std::vector<std::optional<ExperimentConfig>> parsed;
    std::vector<SweepRow> rows(configs.size());
    std::size_t valid = 0;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        try {
            parsed.push_back(parse_config(configs[i]));
            ++valid;
        } catch (const error& e) {
            parsed.emplace_back();
            const auto it = configs[i].find("scheme");
            rows[i].scheme = it == configs[i].end() ? "?" : it->second;
            rows[i].status = std::string("invalid: ") + e.what();
        }
    }
    if (valid == 0) throw config_error("sweep: every configuration is invalid");

    const std::size_t workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    std::vector<std::future<SweepRow>> pending;
    std::vector<std::size_t> index;
    auto drain = [&] {
        for (std::size_t k = 0; k < pending.size(); ++k) rows[index[k]] = pending[k].get();
        pending.clear();
        index.clear();
    };
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        if (!parsed[i]) continue;
        pending.push_back(std::async(std::launch::async, [cfg = *parsed[i], &registry] {
            try {
                return sweep_row(run(cfg, registry));
            } catch (const std::exception& e) {
                SweepRow row;
                row.scheme = to_string(cfg.scheme);
                row.loss = cfg.loss;
                row.horizon = cfg.horizon;
                row.seed = cfg.seed;
                row.status = std::string("failed: ") + e.what();
                return row;
            }
        }));
        index.push_back(i);
        if (pending.size() == workers) drain();
    }
    drain();
    return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "scheme,loss,T,S,seed,regret,regret_per_s_log,regret_per_s_log2,created_experts,total_work,status\n";
    for (const auto& r : rows) {
        std::string status = r.status;
        std::replace(status.begin(), status.end(), ',', ';');
        out << r.scheme << ',' << r.loss << ',' << r.horizon << ',' << r.segments << ',' << r.seed << ','
            << format_double(r.regret) << ',' << format_double(r.per_switch_log) << ','
            << format_double(r.per_switch_log2) << ',' << r.created << ',' << r.work << ',' << status << '\n';
    }
    return out.str();
}

}  // namespace mixdyn::harness
