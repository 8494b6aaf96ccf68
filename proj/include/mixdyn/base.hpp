#pragma once

// Sequential base learners with logarithmic static regret.
//
// A base exposes init(), update(state, x[, side]) and predict(state). The
// update depends only on (state, x): replaying a sequence reproduces the
// state bit for bit. The optional side-information argument is the
// auxiliary input slot lambda_t; the shipped bases ignore it.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mixdyn/errors.hpp"
#include "mixdyn/losses.hpp"

namespace mixdyn {

using SideInfo = std::optional<double>;

template <class B>
concept BaseAlgorithm = requires(const B& base, typename B::State& state, const typename B::State& cstate,
                                 double x, SideInfo side) {
    typename B::State;
    { base.init() } -> std::same_as<typename B::State>;
    base.update(state, x, side);
    { base.predict(cstate) } -> std::convertible_to<double>;
    { base.loss_family() } -> std::same_as<LossFamily>;
    { cstate.count } -> std::convertible_to<std::int64_t>;
};

// Krichevsky-Trofimov estimator for binary sources; pairs with Bernoulli log-loss.
class KtEstimator {
public:
    struct State {
        std::int64_t count = 0;
        std::int64_t ones = 0;
        double prediction = 0.5;
        friend bool operator==(const State&, const State&) = default;
    };

    LossFamily loss_family() const { return LossFamily::bernoulli_log; }
    const char* name() const { return "kt"; }
    State init() const { return {}; }

    void update(State& s, double x, SideInfo = {}) const {
        if (x != 0.0 && x != 1.0) throw domain_error("kt: outcome must be 0 or 1");
        ++s.count;
        if (x == 1.0) ++s.ones;
        const double p = (static_cast<double>(s.ones) + 0.5) / (static_cast<double>(s.count) + 1.0);
        s.prediction = std::clamp(p, kBernoulliEps, 1.0 - kBernoulliEps);
    }

    double predict(const State& s) const { return s.prediction; }
};

// Follow-the-leader for square loss: the running mean of observed outcomes.
class RunningMean {
public:
    struct State {
        std::int64_t count = 0;
        double sum = 0.0;
        double prediction = 0.0;
        friend bool operator==(const State&, const State&) = default;
    };

    LossFamily loss_family() const { return LossFamily::square; }
    const char* name() const { return "running-mean"; }
    State init() const { return {}; }

    void update(State& s, double x, SideInfo = {}) const {
        if (!(x >= -1.0 && x <= 1.0)) throw domain_error("running-mean: outcome outside [-1, 1]");
        ++s.count;
        s.sum += x;
        s.prediction = std::clamp(s.sum / static_cast<double>(s.count), -1.0, 1.0);
    }

    double predict(const State& s) const { return s.prediction; }
};

// Runtime-registered base driven by callbacks. Statistics are opaque doubles.
class CustomBase {
public:
    struct State {
        std::int64_t count = 0;
        std::vector<double> stats;
        double prediction = 0.0;
        friend bool operator==(const State&, const State&) = default;
    };
    using InitFn = std::function<State()>;
    using UpdateFn = std::function<void(State&, double x, SideInfo)>;
    using PredictFn = std::function<double(const State&)>;

    CustomBase(std::string name, LossFamily family, InitFn init, UpdateFn update, PredictFn predict)
        : name_(std::move(name)), family_(family), init_(std::move(init)), update_(std::move(update)),
          predict_(std::move(predict)) {
        if (!init_ || !update_ || !predict_) throw config_error("custom base '" + name_ + "': missing callback");
    }

    LossFamily loss_family() const { return family_; }
    const char* name() const { return name_.c_str(); }

    State init() const {
        State s = init_();
        s.count = 0;
        s.prediction = predict_(s);
        return s;
    }

    void update(State& s, double x, SideInfo side = {}) const {
        update_(s, x, side);
        ++s.count;
        s.prediction = predict_(s);
    }

    double predict(const State& s) const { return s.prediction; }

private:
    std::string name_;
    LossFamily family_;
    InitFn init_;
    UpdateFn update_;
    PredictFn predict_;
};

template <MixableLoss L, BaseAlgorithm B>
void check_compatible(const L& loss, const B& base) {
    if (loss.family() != base.loss_family())
        throw config_error(std::string("base '") + base.name() + "' is not compatible with loss '" +
                           to_string(loss.family()) + "'");
}

template <BaseAlgorithm B>
typename B::State base_init(const B& base) {
    return base.init();
}

template <BaseAlgorithm B>
typename B::State base_update(const B& base, typename B::State state, double x, SideInfo side = {}) {
    base.update(state, x, side);
    return state;
}

// Sequential base losses over xs from a fresh start.
template <MixableLoss L, BaseAlgorithm B>
std::vector<double> base_losses(const B& base, const L& loss, std::span<const double> xs) {
    check_compatible(loss, base);
    std::vector<double> out;
    out.reserve(xs.size());
    auto s = base.init();
    for (double x : xs) {
        out.push_back(evaluate(loss, base.predict(s), x));
        base.update(s, x);
    }
    return out;
}

// L_T(base) - L_T(best fixed prediction in hindsight).
template <MixableLoss L, BaseAlgorithm B>
double static_regret(const B& base, const L& loss, std::span<const double> xs) {
    if (xs.empty()) throw domain_error("static_regret: empty sequence");
    const auto losses = base_losses(base, loss, xs);
    double total = 0.0;
    for (double l : losses) total += l;
    return total - fixed_loss(loss, loss.best_fixed(xs), xs);
}

struct RestartResult {
    double total_loss = 0.0;
    double total_regret = 0.0;
    std::vector<double> segment_regret;
};

// Base restarted at every known segment start; the reference line for the
// dynamic problem when change points are known in advance.
template <MixableLoss L, BaseAlgorithm B>
RestartResult restart_oracle(const B& base, const L& loss, std::span<const double> xs,
                             std::span<const std::int64_t> segment_lengths) {
    RestartResult r;
    std::size_t offset = 0;
    for (auto len : segment_lengths) {
        if (len <= 0) throw domain_error("restart_oracle: segment length must be positive");
        if (offset + static_cast<std::size_t>(len) > xs.size())
            throw domain_error("restart_oracle: segments exceed sequence length");
        const auto seg = xs.subspan(offset, static_cast<std::size_t>(len));
        const auto losses = base_losses(base, loss, seg);
        double seg_loss = 0.0;
        for (double l : losses) seg_loss += l;
        const double regret = seg_loss - fixed_loss(loss, loss.best_fixed(seg), seg);
        r.total_loss += seg_loss;
        r.total_regret += regret;
        r.segment_regret.push_back(regret);
        offset += static_cast<std::size_t>(len);
    }
    if (offset != xs.size()) throw domain_error("restart_oracle: segments do not cover the sequence");
    return r;
}

}  // namespace mixdyn
