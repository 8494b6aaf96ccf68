#pragma once

// Online mixture of hyper-experts.
//
// Each step at time t:
//   1. weights are normalized, P_i = exp(lw_i) with logsumexp(lw) = 0
//   2. theta_t = F({theta_i, P_i}) is emitted
//   3. the outcome is observed; every expert is charged exp(-alpha l_i)
//   4. the transition to t + 1 is applied:
//        tau(i, J)  = 1 / r_i          (J is the largest-period resetter at t + 1)
//        tau(i, i)  = (r_i - 1) / r_i  when r_i != 1
//        tau(i, j)  = 0                otherwise
//      where r_i is the runtime of i at t + 1. A resetting expert other than J
//      loses all its mass; J collects the jump mass of every expert.
//
// Eager mode keeps every created expert, including zero-weight ones. Lazy mode
// holds only experts with positive weight and materializes J on demand. Both
// keep experts ordered by id, so lazy storage is a subsequence of eager storage
// and the floating-point reductions agree bit for bit.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mixdyn/base.hpp"
#include "mixdyn/errors.hpp"
#include "mixdyn/losses.hpp"
#include "mixdyn/numeric.hpp"
#include "mixdyn/schemes.hpp"

namespace mixdyn {

// Exact rational tau value.
struct TransitionWeight {
    Time numerator = 0;
    Time denominator = 1;
    double value() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }
    friend bool operator==(const TransitionWeight&, const TransitionWeight&) = default;
};

// tau_t(i, j). source_runtime and target_runtime are runtimes at t.
inline TransitionWeight transition_weight(Time source_runtime, bool same_expert, bool target_is_jt,
                                          Time target_runtime) {
    if (source_runtime < 1) throw domain_error("transition_weight: runtime must be >= 1");
    if (target_runtime == 1 && target_is_jt) return {1, source_runtime};
    if (same_expert && source_runtime != 1) return {source_runtime - 1, source_runtime};
    return {0, source_runtime};
}

enum class EngineMode { lazy, eager };

inline const char* to_string(EngineMode m) { return m == EngineMode::lazy ? "lazy" : "eager"; }

struct StepRecord {
    Time t = 0;
    double outcome = 0.0;
    double prediction = 0.0;
    double loss = 0.0;
    ExpertSpec jt;               // J_t, the jump target that opened time t
    std::int64_t live = 0;       // experts held at time t
    std::int64_t created = 0;    // C_t
    std::int64_t work = 0;       // base updates performed at time t
    double drift = 0.0;          // log normalizer removed when entering t + 1
};

struct TransitionAudit {
    std::int64_t sources_checked = 0;
    std::int64_t row_sum_violations = 0;       // sum_j tau(i, j) != 1 in exact arithmetic
    double max_conservation_error = 0.0;       // |log(stay + jump)| as applied in log domain
    std::int64_t dead_reset_violations = 0;    // resetting non-J expert left with finite weight
};

template <MixableLoss L, BaseAlgorithm B>
class Mixture {
public:
    struct Expert {
        ExpertSpec spec;
        Time runtime = 1;
        double log_weight = kNegInf;
        typename B::State state;
    };

    Mixture(Scheme scheme, L loss, B base, EngineMode mode = EngineMode::lazy, bool audit = false)
        : scheme_(std::move(scheme)), loss_(std::move(loss)), base_(std::move(base)), mode_(mode), audit_on_(audit) {
        check_compatible(loss_, base_);
        const auto births = scheme_.births_at(1);
        const double w = -std::log(static_cast<double>(births.size()));
        for (const auto& spec : births) experts_.push_back({spec, 1, w, base_.init()});
        jt_ = scheme_.select_jt(1);
        ensure_log_table(2);
        normalize();
        refresh_prediction();
    }

    Time time() const { return t_; }
    bool exhausted() const { return exhausted_; }
    double prediction() const { return prediction_; }
    const ExpertSpec& jt() const { return jt_; }
    EngineMode mode() const { return mode_; }
    const Scheme& scheme() const { return scheme_; }
    const L& loss() const { return loss_; }
    const B& base() const { return base_; }
    std::span<const Expert> experts() const { return experts_; }
    std::int64_t created_count() const { return scheme_.expert_count(t_); }
    double cumulative_loss() const { return cum_loss_; }
    std::int64_t total_work() const { return total_work_; }
    const TransitionAudit& audit() const { return audit_; }

    std::vector<double> normalized_weights() const {
        std::vector<double> p;
        p.reserve(experts_.size());
        for (const auto& e : experts_) p.push_back(std::exp(e.log_weight));
        return p;
    }

    // Consumes the outcome for time t and moves to t + 1.
    StepRecord step(double x) {
        if (exhausted_) throw config_error("mixture: calendar horizon exhausted at t=" + std::to_string(t_));
        check_outcome(loss_, x);

        StepRecord rec;
        rec.t = t_;
        rec.outcome = x;
        rec.prediction = prediction_;
        rec.loss = loss_.raw(prediction_, x);
        rec.jt = jt_;
        rec.live = static_cast<std::int64_t>(experts_.size());
        rec.created = created_count();
        rec.work = rec.live;
        cum_loss_ += rec.loss;
        total_work_ += rec.work;

        const double a = loss_.alpha();
        for (auto& e : experts_) {
            const double l = loss_.raw(base_.predict(e.state), x);
            e.log_weight -= a * l;
            base_.update(e.state, x);
        }

        if (t_ + 1 > scheme_.max_time()) {
            exhausted_ = true;
            return rec;
        }
        rec.drift = advance();
        return rec;
    }

private:
    double advance() {
        const Time next = t_ + 1;
        ensure_log_table(next + 1);
        const ExpertSpec jt = scheme_.select_jt(next);

        LogSumExp jump;
        for (auto& e : experts_) {
            const Time r = e.spec.infinite() ? e.runtime + 1 : (e.runtime == e.spec.period ? 1 : e.runtime + 1);
            const bool resets = r == 1;
            if (audit_on_) audit_source(e, r, jt);
            if (e.log_weight != kNegInf) {
                jump.add(e.log_weight - log_table_[r]);
                e.log_weight = resets ? kNegInf : e.log_weight + (log_table_[r - 1] - log_table_[r]);
            }
            e.runtime = r;
            if (resets) e.state = base_.init();
        }

        if (mode_ == EngineMode::eager) {
            for (const auto& spec : scheme_.births_at(next)) experts_.push_back({spec, 1, kNegInf, base_.init()});
        }

        auto it = std::lower_bound(experts_.begin(), experts_.end(), jt.id,
                                   [](const Expert& e, std::int64_t id) { return e.spec.id < id; });
        if (it == experts_.end() || it->spec.id != jt.id) {
            if (mode_ == EngineMode::eager) throw invariant_violation("eager engine lost J_t");
            it = experts_.insert(it, Expert{jt, 1, kNegInf, base_.init()});
        }
        it->log_weight = jump.value();

        if (audit_on_) {
            for (const auto& e : experts_)
                if (e.runtime == 1 && e.spec.id != jt.id && e.log_weight != kNegInf) ++audit_.dead_reset_violations;
        }
        if (mode_ == EngineMode::lazy) {
            std::erase_if(experts_, [](const Expert& e) { return e.log_weight == kNegInf; });
        }

        t_ = next;
        jt_ = jt;
        const double drift = normalize();
        refresh_prediction();
        return drift;
    }

    void audit_source(const Expert& e, Time r, const ExpertSpec& jt) {
        const bool is_jt = e.spec.id == jt.id;
        const auto stay = transition_weight(r, true, is_jt, r);
        const auto to_j = is_jt ? TransitionWeight{0, r} : transition_weight(r, false, true, 1);
        ++audit_.sources_checked;
        if (stay.denominator != to_j.denominator || stay.numerator + to_j.numerator != stay.denominator)
            ++audit_.row_sum_violations;
        // Factors exactly as the engine applies them in log domain.
        const double log_jump = -log_table_[r];
        const double log_stay = r == 1 ? kNegInf : log_table_[r - 1] - log_table_[r];
        const double total = is_jt ? 0.0 : std::log(std::exp(log_jump) + (log_stay == kNegInf ? 0.0 : std::exp(log_stay)));
        audit_.max_conservation_error = std::max(audit_.max_conservation_error, std::abs(total));
    }

    double normalize() {
        LogSumExp acc;
        for (const auto& e : experts_) acc.add(e.log_weight);
        const double norm = acc.value();
        if (norm == kNegInf || !std::isfinite(norm))
            throw invariant_violation("mixture: total weight underflow at t=" + std::to_string(t_));
        for (auto& e : experts_) e.log_weight -= norm;
        return norm;
    }

    void refresh_prediction() {
        preds_.clear();
        logw_.clear();
        for (const auto& e : experts_) {
            preds_.push_back(base_.predict(e.state));
            logw_.push_back(e.log_weight);
        }
        prediction_ = loss_.substitute_log(preds_, logw_);
    }

    void ensure_log_table(Time upto) {
        while (static_cast<Time>(log_table_.size()) <= upto) {
            const auto k = static_cast<double>(log_table_.size());
            log_table_.push_back(k == 0.0 ? kNegInf : std::log(k));
        }
    }

    Scheme scheme_;
    L loss_;
    B base_;
    EngineMode mode_;
    bool audit_on_;
    Time t_ = 1;
    bool exhausted_ = false;
    ExpertSpec jt_;
    double prediction_ = 0.0;
    double cum_loss_ = 0.0;
    std::int64_t total_work_ = 0;
    std::vector<Expert> experts_;
    std::vector<double> preds_;
    std::vector<double> logw_;
    std::vector<double> log_table_;
    TransitionAudit audit_;
};

struct RunTrace {
    std::vector<StepRecord> steps;
    double cumulative_loss = 0.0;
    std::int64_t total_work = 0;
    std::int64_t created = 0;
    TransitionAudit audit;
};

// Runs a fresh mixture over xs.
template <MixableLoss L, BaseAlgorithm B>
RunTrace run_mixture(const Scheme& scheme, const L& loss, const B& base, std::span<const double> xs,
                     EngineMode mode = EngineMode::lazy, bool audit = false) {
    Mixture<L, B> mix(scheme, loss, base, mode, audit);
    RunTrace trace;
    trace.steps.reserve(xs.size());
    for (double x : xs) trace.steps.push_back(mix.step(x));
    trace.cumulative_loss = mix.cumulative_loss();
    trace.total_work = mix.total_work();
    trace.created = trace.steps.empty() ? 0 : trace.steps.back().created;
    trace.audit = mix.audit();
    return trace;
}

}  // namespace mixdyn
