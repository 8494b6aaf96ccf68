#pragma once

// Hyper-expert calendars.
//
// Every hyper-expert runs the base algorithm with a period p and first start
// s. At time t >= s its runtime is rem(t - s, p) + 1 and its next reset is
// t - runtime + p + 1. Three calendars are provided:
//
//   lin  one never-resetting expert (p = inf) born at every t
//   log  one expert per period 2^k, started at s = 2^k
//   sub  periods f_1 = 1 < f_2 < ... with f_n = alpha_n f_{n-1} + beta_n;
//        period f_n starts at beta_n + j f_{n-1} for j = 1..alpha_n
//
// All queries are closed form over the calendar: no expert table is stored.
// Expert ids follow creation order (start time, then period), so the id of
// (p, s) is the number of experts born before s plus its rank among the
// births at s.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mixdyn/errors.hpp"

namespace mixdyn {

using Time = std::int64_t;

// Infinite period, and "never" for next_reset.
inline constexpr Time kInfinite = std::numeric_limits<Time>::max();

struct ExpertSpec {
    std::int64_t id = 0;
    Time period = 1;
    Time start = 1;

    bool infinite() const { return period == kInfinite; }
    friend bool operator==(const ExpertSpec&, const ExpertSpec&) = default;
};

inline Time runtime(Time t, const ExpertSpec& e) {
    if (t < e.start)
        throw not_born_error("expert (p=" + std::to_string(e.period) + ", s=" + std::to_string(e.start) +
                             ") queried at t=" + std::to_string(t));
    if (e.infinite()) return t - e.start + 1;
    return (t - e.start) % e.period + 1;
}

inline Time next_reset(Time t, const ExpertSpec& e) {
    if (t < e.start) return e.start;
    if (e.infinite()) return t == e.start ? e.start : kInfinite;
    return t - runtime(t, e) + e.period + 1;
}

struct SubParams {
    double a = 1.0;
    double b = 0.5;
    double c = 1.5;
};

// The period ladder f_1 = 1 < f_2 < ... with its decomposition
// f_n = alpha_n f_{n-1} + beta_n, 0 <= beta_n <= f_{n-1}. Indices are 1-based.
class PeriodSequence {
public:
    // f_n = floor(exp(a exp(b log^c n))) for n >= 2. Values that repeat the
    // previous entry are skipped. Stops at the first f_n > horizon, so every
    // start time <= horizon is represented.
    static PeriodSequence materialize(double a, double b, double c, Time horizon) {
        if (!(a > 0.0) || !(b > 0.0) || !(c > 1.0) || !std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c))
            throw config_error("period ladder requires a > 0, b > 0, c > 1");
        if (horizon < 1) throw config_error("period ladder requires horizon >= 1");
        PeriodSequence seq;
        seq.params_ = SubParams{a, b, c};
        seq.f_.push_back(1);
        seq.alpha_.push_back(0);
        seq.beta_.push_back(0);
        constexpr long double kCap = 4.0e18L;
        for (std::int64_t n = 2; seq.f_.back() <= horizon; ++n) {
            const long double ln = std::log(static_cast<long double>(n));
            const long double inner = static_cast<long double>(a) *
                                      std::exp(static_cast<long double>(b) * std::pow(ln, static_cast<long double>(c)));
            if (inner > std::log(kCap)) throw config_error("period ladder overflows before reaching the horizon");
            const auto f = static_cast<Time>(std::floor(std::exp(inner)));
            if (f <= seq.f_.back()) continue;
            seq.push(f);
            if (n > 100000000) throw config_error("period ladder does not grow");
        }
        return seq;
    }

    // Explicit ladder with a caller-chosen decomposition (e.g. alpha = 1,
    // beta = f_{n-1}, which reproduces the doubling calendar).
    static PeriodSequence from_decomposition(std::vector<Time> periods, std::vector<Time> alphas,
                                             std::vector<Time> betas) {
        if (periods.empty() || periods.front() != 1) throw config_error("period ladder must start with f_1 = 1");
        if (alphas.size() != periods.size() || betas.size() != periods.size())
            throw config_error("period ladder decomposition size mismatch");
        for (std::size_t i = 1; i < periods.size(); ++i) {
            const Time prev = periods[i - 1];
            if (periods[i] <= prev) throw config_error("period ladder must be strictly increasing");
            if (alphas[i] < 1 || betas[i] < 0 || betas[i] > prev || alphas[i] * prev + betas[i] != periods[i])
                throw config_error("invalid decomposition at index " + std::to_string(i + 1));
        }
        alphas[0] = 0;
        betas[0] = 0;
        PeriodSequence seq;
        seq.f_ = std::move(periods);
        seq.alpha_ = std::move(alphas);
        seq.beta_ = std::move(betas);
        return seq;
    }

    std::size_t size() const { return f_.size(); }
    Time period(std::size_t n) const { return f_.at(n - 1); }
    Time alpha(std::size_t n) const { return n >= 2 ? alpha_.at(n - 1) : 0; }
    Time beta(std::size_t n) const { return n >= 2 ? beta_.at(n - 1) : 0; }
    const std::vector<Time>& periods() const { return f_; }
    std::optional<SubParams> params() const { return params_; }

    // Largest time for which the calendar is complete.
    Time max_time() const { return f_.back() - 1; }

    // Largest n with f_n < t.
    std::size_t n_index(Time t) const {
        if (t <= f_.front()) throw undefined_index_error("n_index undefined for t=" + std::to_string(t));
        if (t > f_.back()) throw config_error("n_index: t beyond materialized ladder");
        const auto it = std::lower_bound(f_.begin(), f_.end(), t);
        return static_cast<std::size_t>(it - f_.begin());
    }

private:
    void push(Time f) {
        const Time prev = f_.back();
        const Time al = f / prev;
        f_.push_back(f);
        alpha_.push_back(al);
        beta_.push_back(f - al * prev);
    }

    std::vector<Time> f_;
    std::vector<Time> alpha_;
    std::vector<Time> beta_;
    std::optional<SubParams> params_;
};

enum class SchemeKind { lin, log, sub };

inline const char* to_string(SchemeKind k) {
    switch (k) {
        case SchemeKind::lin: return "lin";
        case SchemeKind::log: return "log";
        case SchemeKind::sub: return "sub";
    }
    return "?";
}

class Scheme {
public:
    static Scheme lin() { return Scheme(SchemeKind::lin, nullptr); }
    static Scheme log() { return Scheme(SchemeKind::log, nullptr); }
    static Scheme sub(PeriodSequence seq) {
        return Scheme(SchemeKind::sub, std::make_shared<const PeriodSequence>(std::move(seq)));
    }
    static Scheme sub(SubParams p, Time horizon) {
        return sub(PeriodSequence::materialize(p.a, p.b, p.c, horizon));
    }

    SchemeKind kind() const { return kind_; }
    const char* name() const { return to_string(kind_); }
    const PeriodSequence& ladder() const {
        if (!ladder_) throw config_error("scheme has no period ladder");
        return *ladder_;
    }

    // Largest time the calendar answers for.
    Time max_time() const { return kind_ == SchemeKind::sub ? ladder_->max_time() : kInfinite - 1; }

    std::vector<ExpertSpec> births_at(Time t) const {
        check_time(t);
        std::vector<ExpertSpec> out;
        switch (kind_) {
            case SchemeKind::lin:
                out.push_back({t - 1, kInfinite, t});
                break;
            case SchemeKind::log:
                if (std::has_single_bit(static_cast<std::uint64_t>(t))) out.push_back({log_count(t - 1), t, t});
                break;
            case SchemeKind::sub: {
                const std::int64_t base_id = sub_count(t - 1);
                if (t == 1) out.push_back({base_id, 1, 1});
                const auto& f = *ladder_;
                for (std::size_t n = 2; n <= f.size(); ++n) {
                    const Time prev = f.period(n - 1);
                    if (t < f.beta(n) + prev) break;  // first start beta_n + f_{n-1} grows with n
                    const Time off = t - f.beta(n);
                    if (off % prev == 0 && off / prev <= f.alpha(n))
                        out.push_back({base_id + static_cast<std::int64_t>(out.size()), f.period(n), t});
                }
                break;
            }
        }
        return out;
    }

    // Experts whose next reset, seen from t - 1, is t. Births count.
    std::vector<ExpertSpec> resetting_at(Time t) const {
        check_time(t);
        std::vector<ExpertSpec> out;
        switch (kind_) {
            case SchemeKind::lin:
                return births_at(t);
            case SchemeKind::log:
                for (std::int64_t k = 0; (Time{1} << k) <= t; ++k) {
                    const Time p = Time{1} << k;
                    if (t % p == 0) out.push_back({k, p, p});
                }
                break;
            case SchemeKind::sub: {
                out.push_back({0, 1, 1});
                const auto& f = *ladder_;
                for (std::size_t n = 2; n <= f.size(); ++n) {
                    const Time prev = f.period(n - 1);
                    const Time p = f.period(n);
                    if (f.beta(n) + prev > t) break;
                    for (Time j = 1; j <= f.alpha(n); ++j) {
                        const Time s = f.beta(n) + j * prev;
                        if (s > t) break;
                        if ((t - s) % p == 0) out.push_back({sub_id(p, s), p, s});
                    }
                }
                break;
            }
        }
        return out;
    }

    // The resetting expert with the largest period; ties by start, then id.
    ExpertSpec select_jt(Time t) const {
        const auto resetters = resetting_at(t);
        if (resetters.empty()) throw scheme_integrity_error("no resetting expert at t=" + std::to_string(t));
        return *std::min_element(resetters.begin(), resetters.end(), [](const ExpertSpec& x, const ExpertSpec& y) {
            if (x.period != y.period) return x.period > y.period;
            if (x.start != y.start) return x.start < y.start;
            return x.id < y.id;
        });
    }

    // Number of experts with s <= T.
    std::int64_t expert_count(Time T) const {
        if (T <= 0) return 0;
        check_time(T);
        switch (kind_) {
            case SchemeKind::lin: return T;
            case SchemeKind::log: return log_count(T);
            case SchemeKind::sub: return sub_count(T);
        }
        return 0;
    }

    // lin: T. log: floor(log2 T) + 1. sub: 1 + n_T max_{2..n_T+1} alpha_n
    // (n_T is taken as at least 1 so that T = 1 is covered).
    std::int64_t count_bound(Time T) const {
        if (T <= 0) return 0;
        check_time(T);
        switch (kind_) {
            case SchemeKind::lin: return T;
            case SchemeKind::log: return log_count(T);
            case SchemeKind::sub: {
                const auto& f = *ladder_;
                const std::size_t nt = T >= 2 ? std::max<std::size_t>(f.n_index(T), 1) : 1;
                Time max_alpha = 0;
                for (std::size_t n = 2; n <= std::min(nt + 1, f.size()); ++n) max_alpha = std::max(max_alpha, f.alpha(n));
                return 1 + static_cast<std::int64_t>(nt) * max_alpha;
            }
        }
        return 0;
    }

private:
    Scheme(SchemeKind kind, std::shared_ptr<const PeriodSequence> ladder) : kind_(kind), ladder_(std::move(ladder)) {}

    void check_time(Time t) const {
        if (t < 1) throw config_error("calendar time must be >= 1");
        if (t > max_time())
            throw config_error("t=" + std::to_string(t) + " beyond the materialized period ladder");
    }

    static std::int64_t log_count(Time T) {
        return T <= 0 ? 0 : static_cast<std::int64_t>(std::bit_width(static_cast<std::uint64_t>(T)));
    }

    std::int64_t sub_count(Time T) const {
        if (T <= 0) return 0;
        const auto& f = *ladder_;
        std::int64_t count = 1;
        for (std::size_t n = 2; n <= f.size(); ++n) {
            if (T < f.beta(n) + f.period(n - 1)) break;
            count += std::min(f.alpha(n), (T - f.beta(n)) / f.period(n - 1));
        }
        return count;
    }

    std::int64_t sub_id(Time p, Time s) const {
        const auto births = births_at(s);
        for (const auto& b : births)
            if (b.period == p) return b.id;
        throw scheme_integrity_error("no birth of period " + std::to_string(p) + " at " + std::to_string(s));
    }

    SchemeKind kind_;
    std::shared_ptr<const PeriodSequence> ladder_;
};

}  // namespace mixdyn
