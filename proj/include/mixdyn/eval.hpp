#pragma once

// Post-hoc evaluation: hindsight comparators, dynamic regret, switch and
// count bounds, and brute-force verification of the mixture loss bound
//
//   L_T(mixture) <= L_T(path) + W(path) / alpha,  W = -log prod_t tau_t(I_{t-1}, I_t)
//
// over every expert path with nonzero transition product.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "mixdyn/base.hpp"
#include "mixdyn/errors.hpp"
#include "mixdyn/losses.hpp"
#include "mixdyn/mixture.hpp"
#include "mixdyn/schemes.hpp"

namespace mixdyn {

struct Segmentation {
    std::vector<Time> lengths;
    std::vector<double> comparators;
    std::vector<double> losses;  // comparator loss on each segment

    std::size_t size() const { return lengths.size(); }
    Time horizon() const { return std::accumulate(lengths.begin(), lengths.end(), Time{0}); }
    double oracle_loss() const { return std::accumulate(losses.begin(), losses.end(), 0.0); }

    // 1-based first time of each segment.
    std::vector<Time> starts() const {
        std::vector<Time> out;
        Time t = 1;
        for (auto len : lengths) {
            out.push_back(t);
            t += len;
        }
        return out;
    }
};

// Best fixed prediction per segment.
template <MixableLoss L>
Segmentation oracle_comparators(const L& loss, std::span<const double> xs, std::span<const Time> lengths) {
    Segmentation seg;
    std::size_t offset = 0;
    for (auto len : lengths) {
        if (len <= 0) throw domain_error("oracle_comparators: empty segment");
        if (offset + static_cast<std::size_t>(len) > xs.size())
            throw domain_error("oracle_comparators: segments exceed sequence");
        const auto part = xs.subspan(offset, static_cast<std::size_t>(len));
        const double theta = loss.best_fixed(part);
        seg.lengths.push_back(len);
        seg.comparators.push_back(theta);
        seg.losses.push_back(fixed_loss(loss, theta, part));
        offset += static_cast<std::size_t>(len);
    }
    if (offset != xs.size()) throw domain_error("oracle_comparators: segments do not cover the sequence");
    return seg;
}

inline std::int64_t n_index_or_zero(const PeriodSequence& f, Time t) { return t <= 1 ? 0 : static_cast<std::int64_t>(f.n_index(t)); }

// lin: S. log: sum_s floor(log2 t_s) + 1. sub: S + sum_s n_{t_s}.
inline std::int64_t switch_bound(const Scheme& scheme, const Segmentation& seg) {
    std::int64_t total = 0;
    for (auto len : seg.lengths) {
        switch (scheme.kind()) {
            case SchemeKind::lin: total += 1; break;
            case SchemeKind::log: total += static_cast<std::int64_t>(std::bit_width(static_cast<std::uint64_t>(len))); break;
            case SchemeKind::sub: total += 1 + n_index_or_zero(scheme.ladder(), len); break;
        }
    }
    return total;
}

// exp((log(log(t + 1) / a) / b)^(1/c)); empty where the logs are undefined.
inline std::optional<double> nts_bound(double t, double a, double b, double c) {
    if (!(t >= 2.0) || !(a > 0.0) || !(b > 0.0) || !(c > 1.0)) return std::nullopt;
    const double inner = std::log(std::log(t + 1.0) / a);
    if (!(inner > 0.0) || !std::isfinite(inner)) return std::nullopt;
    return std::exp(std::pow(inner / b, 1.0 / c));
}

struct ExpertPath {
    std::vector<ExpertSpec> experts;  // I_1..I_T
    std::int64_t switches = 0;        // 1 + #{t : I_t != I_{t-1}}
};

inline std::int64_t count_switches(std::span<const ExpertSpec> path) {
    if (path.empty()) return 0;
    std::int64_t s = 1;
    for (std::size_t i = 1; i < path.size(); ++i) s += path[i].id != path[i - 1].id ? 1 : 0;
    return s;
}

// The covering path built only from J selections: start on J_1, jump to J_t at
// every segment start, and move to J_t whenever the held expert resets
// without being J_t. Periods grow along each segment, so its switch count is
// bounded by switch_bound().
inline ExpertPath covering_path(const Scheme& scheme, const Segmentation& seg) {
    ExpertPath path;
    const Time T = seg.horizon();
    if (T == 0) return path;
    const auto starts = seg.starts();
    std::size_t next_seg = 1;
    ExpertSpec cur = scheme.select_jt(1);
    path.experts.push_back(cur);
    for (Time t = 2; t <= T; ++t) {
        const bool boundary = next_seg < starts.size() && starts[next_seg] == t;
        if (boundary) ++next_seg;
        const bool resets = next_reset(t - 1, cur) == t;
        if (boundary || resets) cur = scheme.select_jt(t);
        path.experts.push_back(cur);
    }
    path.switches = count_switches(path.experts);
    return path;
}

struct PathCost {
    double loss = 0.0;        // sum_t l_t(theta_{I_t, t})
    double redundancy = 0.0;  // W = -log prod tau
    bool valid = true;        // every tau nonzero
};

// Replays the base along a path. Each expert's base restarts whenever its
// runtime returns to 1, so a valid path carries one continuous base run
// between consecutive restarts.
template <MixableLoss L, BaseAlgorithm B>
PathCost path_cost(const Scheme& scheme, const L& loss, const B& base, std::span<const double> xs,
                   std::span<const ExpertSpec> path) {
    if (path.size() != xs.size()) throw domain_error("path_cost: length mismatch");
    PathCost cost;
    if (path.empty()) return cost;
    const auto births = scheme.births_at(1);
    if (std::none_of(births.begin(), births.end(), [&](const ExpertSpec& e) { return e.id == path[0].id; })) {
        cost.valid = false;
        cost.redundancy = std::numeric_limits<double>::infinity();
        return cost;
    }
    cost.redundancy = std::log(static_cast<double>(births.size()));
    auto state = base.init();
    for (std::size_t k = 0; k < path.size(); ++k) {
        const Time t = static_cast<Time>(k) + 1;
        const ExpertSpec& e = path[k];
        if (t < e.start) {
            cost.valid = false;
            cost.redundancy = std::numeric_limits<double>::infinity();
            return cost;
        }
        const Time r = runtime(t, e);
        if (k > 0) {
            const ExpertSpec jt = scheme.select_jt(t);
            const ExpertSpec& prev = path[k - 1];
            const Time src = runtime(t, prev);
            const auto tau = transition_weight(src, prev.id == e.id, e.id == jt.id, r);
            if (tau.numerator == 0) {
                cost.valid = false;
                cost.redundancy = std::numeric_limits<double>::infinity();
                return cost;
            }
            cost.redundancy -= std::log(tau.value());
        }
        if (r == 1) state = base.init();
        cost.loss += evaluate(loss, base.predict(state), xs[k]);
        base.update(state, xs[k]);
    }
    return cost;
}

struct RegretReport {
    Time horizon = 0;
    std::int64_t segments = 0;
    double mixture_loss = 0.0;
    double oracle_loss = 0.0;
    double dynamic_regret = 0.0;
    std::int64_t realized_switches = 0;  // switches of the covering J-path
    std::int64_t switch_bound = 0;       // theoretical S_T
    std::int64_t created_experts = 0;    // C_T
    std::int64_t count_bound = 0;
    std::int64_t total_work = 0;
    double path_loss = 0.0;              // covering path
    double path_redundancy = 0.0;        // W of covering path
    double expert_regret = 0.0;          // E = path loss - oracle loss
    bool decomposition_holds = false;    // regret <= E + W / alpha
};

inline RegretReport dynamic_regret(const RunTrace& trace, const Segmentation& seg) {
    if (static_cast<Time>(trace.steps.size()) != seg.horizon())
        throw domain_error("dynamic_regret: trace length does not match segmentation");
    RegretReport r;
    r.horizon = seg.horizon();
    r.segments = static_cast<std::int64_t>(seg.size());
    r.mixture_loss = trace.cumulative_loss;
    r.oracle_loss = seg.oracle_loss();
    r.dynamic_regret = r.mixture_loss - r.oracle_loss;
    r.created_experts = trace.created;
    r.total_work = trace.total_work;
    return r;
}

// Full report including bounds and the covering-path decomposition.
template <MixableLoss L, BaseAlgorithm B>
RegretReport make_report(const Scheme& scheme, const L& loss, const B& base, std::span<const double> xs,
                         const RunTrace& trace, const Segmentation& seg) {
    RegretReport r = dynamic_regret(trace, seg);
    r.switch_bound = switch_bound(scheme, seg);
    r.count_bound = scheme.count_bound(r.horizon);
    const auto path = covering_path(scheme, seg);
    r.realized_switches = path.switches;
    const auto cost = path_cost(scheme, loss, base, xs, path.experts);
    r.path_loss = cost.loss;
    r.path_redundancy = cost.redundancy;
    r.expert_regret = cost.loss - r.oracle_loss;
    r.decomposition_holds = cost.valid && r.dynamic_regret <= r.expert_regret + cost.redundancy / loss.alpha() + 1e-9;
    return r;
}

struct PathVerdict {
    bool pass = true;
    double mixture_loss = 0.0;
    double best_bound = std::numeric_limits<double>::infinity();  // min over paths of loss + W / alpha
    double min_margin = std::numeric_limits<double>::infinity();  // min of bound - mixture loss
    std::vector<ExpertSpec> best_path;
    std::int64_t best_switches = 0;
    std::int64_t paths = 0;
};

inline constexpr Time kPathOracleMaxT = 8;

// Exhaustive check of the mixture loss bound on every valid expert path.
// Expert predictions and transition weights are rebuilt from the calendar and
// the base alone; only the mixture's cumulative loss comes from the engine.
template <MixableLoss L, BaseAlgorithm B>
PathVerdict path_oracle(const Scheme& scheme, const L& loss, const B& base, std::span<const double> xs,
                        EngineMode mode = EngineMode::eager) {
    const Time T = static_cast<Time>(xs.size());
    if (T < 1 || T > kPathOracleMaxT) throw domain_error("path_oracle: requires 1 <= T <= 8");

    PathVerdict v;
    v.mixture_loss = run_mixture(scheme, loss, base, xs, mode).cumulative_loss;

    // All experts created by T, with predictions theta_{i,t} and losses.
    std::vector<ExpertSpec> experts;
    for (Time t = 1; t <= T; ++t)
        for (const auto& e : scheme.births_at(t)) experts.push_back(e);
    const std::size_t n = experts.size();
    std::vector<std::vector<double>> step_loss(n, std::vector<double>(static_cast<std::size_t>(T), 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        auto state = base.init();
        for (Time t = experts[i].start; t <= T; ++t) {
            if (runtime(t, experts[i]) == 1) state = base.init();
            const double x = xs[static_cast<std::size_t>(t - 1)];
            step_loss[i][static_cast<std::size_t>(t - 1)] = evaluate(loss, base.predict(state), x);
            base.update(state, x);
        }
    }
    std::vector<ExpertSpec> jts;
    for (Time t = 1; t <= T; ++t) jts.push_back(scheme.select_jt(t));

    const double inv_alpha = 1.0 / loss.alpha();
    const double prior = -std::log(static_cast<double>(scheme.births_at(1).size()));
    std::vector<std::size_t> path;

    std::function<void(Time, double, double)> dfs = [&](Time t, double acc_loss, double acc_logtau) {
        if (t > T) {
            ++v.paths;
            const double bound = acc_loss - inv_alpha * acc_logtau;
            v.min_margin = std::min(v.min_margin, bound - v.mixture_loss);
            if (bound < v.best_bound) {
                v.best_bound = bound;
                v.best_path.clear();
                for (auto idx : path) v.best_path.push_back(experts[idx]);
            }
            return;
        }
        const std::size_t k = static_cast<std::size_t>(t - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (experts[j].start > t) continue;
            double logtau;
            if (t == 1) {
                logtau = prior;
            } else {
                const auto& src = experts[path.back()];
                const auto tau = transition_weight(runtime(t, src), src.id == experts[j].id,
                                                   experts[j].id == jts[k].id, runtime(t, experts[j]));
                if (tau.numerator == 0) continue;
                logtau = std::log(tau.value());
            }
            path.push_back(j);
            dfs(t + 1, acc_loss + step_loss[j][k], acc_logtau + logtau);
            path.pop_back();
        }
    };
    dfs(1, 0.0, 0.0);

    v.best_switches = count_switches(v.best_path);
    v.pass = v.paths > 0 && v.min_margin >= -1e-9;
    return v;
}

struct ComplexityCounters {
    std::vector<std::int64_t> per_step_work;
    std::int64_t total_work = 0;
    std::int64_t max_live = 0;
    std::int64_t created = 0;
    std::int64_t count_bound = 0;
    bool within_bound = true;  // created <= count_bound at every step
};

inline ComplexityCounters complexity_audit(const Scheme& scheme, const RunTrace& trace) {
    ComplexityCounters c;
    for (const auto& s : trace.steps) {
        c.per_step_work.push_back(s.work);
        c.total_work += s.work;
        c.max_live = std::max(c.max_live, s.live);
        if (s.created > scheme.count_bound(s.t)) c.within_bound = false;
    }
    if (!trace.steps.empty()) {
        c.created = trace.steps.back().created;
        c.count_bound = scheme.count_bound(trace.steps.back().t);
    }
    return c;
}

}  // namespace mixdyn
