#pragma once

// Mixable losses over scalar predictions.
//
// A loss l is alpha-mixable when some substitution F maps any weighted set of
// predictions {theta_i, P_i} to one prediction theta_hat with
//
//   exp(-alpha * l(theta_hat)) >= sum_i P_i * exp(-alpha * l(theta_i)).
//
// Shipped families:
//   square         l = (theta - x)^2 on [-1, 1], alpha = 1/2
//   bernoulli-log  l = -log P(x | theta) on [eps, 1 - eps], alpha = 1
//   exp-concave    user-supplied l, alpha = lambda, mean substitution
//
// Every loss exposes substitute_log(), the substitution evaluated directly on
// unnormalized log-weights. The mixture engine uses it so that weights never
// leave the log domain.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mixdyn/errors.hpp"
#include "mixdyn/numeric.hpp"

namespace mixdyn {

enum class LossFamily { square, bernoulli_log, exp_concave_custom };

inline const char* to_string(LossFamily f) {
    switch (f) {
        case LossFamily::square: return "square";
        case LossFamily::bernoulli_log: return "bernoulli";
        case LossFamily::exp_concave_custom: return "exp-concave";
    }
    return "?";
}

struct WeightedPrediction {
    double prediction;
    double mass;
};

// Tolerance for how far a weighted prediction set may drift from unit mass.
inline constexpr double kMassTolerance = 1e-12;
// Numerical overshoot of a substitution that is silently projected back.
inline constexpr double kOvershootTolerance = 1e-9;
// Bernoulli predictions live in [kBernoulliEps, 1 - kBernoulliEps].
inline constexpr double kBernoulliEps = 1e-6;

template <class L>
concept MixableLoss = requires(const L& loss, double theta, double x, std::span<const double> v,
                               std::span<const WeightedPrediction> mix) {
    { loss.family() } -> std::same_as<LossFamily>;
    { loss.alpha() } -> std::convertible_to<double>;
    { loss.lower() } -> std::convertible_to<double>;
    { loss.upper() } -> std::convertible_to<double>;
    { loss.prediction_ok(theta) } -> std::same_as<bool>;
    { loss.outcome_ok(x) } -> std::same_as<bool>;
    { loss.raw(theta, x) } -> std::convertible_to<double>;
    { loss.substitute_log(v, v) } -> std::convertible_to<double>;
    { loss.best_fixed(v) } -> std::convertible_to<double>;
};

namespace detail {

inline double project_overshoot(double value, double lo, double hi, const char* who) {
    if (!std::isfinite(value)) throw invariant_violation(std::string(who) + ": non-finite substitution");
    if (value < lo) {
        if (lo - value >= kOvershootTolerance)
            throw invariant_violation(std::string(who) + ": substitution below prediction domain");
        return lo;
    }
    if (value > hi) {
        if (value - hi >= kOvershootTolerance)
            throw invariant_violation(std::string(who) + ": substitution above prediction domain");
        return hi;
    }
    return value;
}

// sum_i P_i theta_i with P_i = exp(lw_i - logsumexp(lw)).
inline double weighted_mean_log(std::span<const double> preds, std::span<const double> log_weights) {
    const double norm = log_sum_exp(log_weights);
    if (norm == kNegInf) throw invariant_violation("substitution: all weights are zero");
    double acc = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (log_weights[i] == kNegInf) continue;
        acc += std::exp(log_weights[i] - norm) * preds[i];
    }
    return acc;
}

}  // namespace detail

class SquareLoss {
public:
    LossFamily family() const { return LossFamily::square; }
    double alpha() const { return 0.5; }
    double lower() const { return -1.0; }
    double upper() const { return 1.0; }
    bool prediction_ok(double theta) const { return theta >= -1.0 && theta <= 1.0; }
    bool outcome_ok(double x) const { return x >= -1.0 && x <= 1.0; }

    double raw(double theta, double x) const {
        const double d = theta - x;
        return d * d;
    }

    // theta_hat = 1/2 [log sum P e^{-(theta-1)^2/2} - log sum P e^{-(theta+1)^2/2}].
    // The q = 0 term of the three-point form vanishes. Normalization of the
    // weights cancels between the two log-sums.
    double substitute_log(std::span<const double> preds, std::span<const double> log_weights) const {
        LogSumExp plus;
        LogSumExp minus;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            if (log_weights[i] == kNegInf) continue;
            const double up = preds[i] - 1.0;
            const double dn = preds[i] + 1.0;
            plus.add(log_weights[i] - 0.5 * up * up);
            minus.add(log_weights[i] - 0.5 * dn * dn);
        }
        if (plus.value() == kNegInf) throw invariant_violation("square substitution: all weights are zero");
        return detail::project_overshoot(0.5 * (plus.value() - minus.value()), -1.0, 1.0, "square");
    }

    // Clipped sample mean.
    double best_fixed(std::span<const double> xs) const {
        if (xs.empty()) throw domain_error("square: empty sequence has no hindsight comparator");
        const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
        return std::clamp(mean, -1.0, 1.0);
    }
};

class BernoulliLogLoss {
public:
    LossFamily family() const { return LossFamily::bernoulli_log; }
    double alpha() const { return 1.0; }
    double lower() const { return kBernoulliEps; }
    double upper() const { return 1.0 - kBernoulliEps; }
    bool prediction_ok(double theta) const { return theta >= lower() && theta <= upper(); }
    bool outcome_ok(double x) const { return x == 0.0 || x == 1.0; }

    double raw(double theta, double x) const { return x == 1.0 ? -std::log(theta) : -std::log1p(-theta); }

    // Mixture of Bernoulli laws: the mean meets the mixability bound with equality.
    double substitute_log(std::span<const double> preds, std::span<const double> log_weights) const {
        return detail::project_overshoot(detail::weighted_mean_log(preds, log_weights), lower(), upper(),
                                         "bernoulli");
    }

    // Empirical rate clamped into the prediction domain.
    double best_fixed(std::span<const double> xs) const {
        if (xs.empty()) throw domain_error("bernoulli: empty sequence has no hindsight comparator");
        const double ones = std::accumulate(xs.begin(), xs.end(), 0.0);
        return std::clamp(ones / static_cast<double>(xs.size()), lower(), upper());
    }
};

// lambda-exp-concave loss supplied by the caller; lambda-mixable under the mean.
class ExpConcaveLoss {
public:
    using Evaluator = std::function<double(double theta, double x)>;
    using OutcomeCheck = std::function<bool(double x)>;

    ExpConcaveLoss(Evaluator eval, double lambda, double lo, double hi, OutcomeCheck outcome = {})
        : eval_(std::move(eval)), lambda_(lambda), lo_(lo), hi_(hi), outcome_(std::move(outcome)) {
        if (!eval_) throw config_error("exp-concave loss: missing evaluator");
        if (!(lambda_ > 0.0) || !std::isfinite(lambda_)) throw config_error("exp-concave loss: lambda must be positive");
        if (!(lo_ < hi_) || !std::isfinite(lo_) || !std::isfinite(hi_))
            throw config_error("exp-concave loss: invalid prediction interval");
    }

    LossFamily family() const { return LossFamily::exp_concave_custom; }
    double alpha() const { return lambda_; }
    double lower() const { return lo_; }
    double upper() const { return hi_; }
    bool prediction_ok(double theta) const { return theta >= lo_ && theta <= hi_; }
    bool outcome_ok(double x) const { return outcome_ ? outcome_(x) : std::isfinite(x); }
    double raw(double theta, double x) const { return eval_(theta, x); }

    double substitute_log(std::span<const double> preds, std::span<const double> log_weights) const {
        return detail::project_overshoot(detail::weighted_mean_log(preds, log_weights), lo_, hi_, "exp-concave");
    }

    // Golden-section search; exp-concavity implies convexity on the interval.
    double best_fixed(std::span<const double> xs) const {
        if (xs.empty()) throw domain_error("exp-concave: empty sequence has no hindsight comparator");
        auto total = [&](double theta) {
            double s = 0.0;
            for (double x : xs) s += eval_(theta, x);
            return s;
        };
        const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
        double a = lo_;
        double b = hi_;
        double c = b - ratio * (b - a);
        double d = a + ratio * (b - a);
        double fc = total(c);
        double fd = total(d);
        for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = total(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = total(d);
            }
        }
        const double mid = 0.5 * (a + b);
        double best = mid;
        double fbest = total(mid);
        for (double edge : {lo_, hi_}) {
            const double fe = total(edge);
            if (fe < fbest) {
                best = edge;
                fbest = fe;
            }
        }
        return best;
    }

private:
    Evaluator eval_;
    double lambda_;
    double lo_;
    double hi_;
    OutcomeCheck outcome_;
};

template <MixableLoss L>
void check_prediction(const L& loss, double theta) {
    if (!std::isfinite(theta) || !loss.prediction_ok(theta))
        throw domain_error(std::string(to_string(loss.family())) + ": prediction " + std::to_string(theta) +
                           " outside domain");
}

template <MixableLoss L>
void check_outcome(const L& loss, double x) {
    if (!std::isfinite(x) || !loss.outcome_ok(x))
        throw domain_error(std::string(to_string(loss.family())) + ": outcome " + std::to_string(x) +
                           " outside domain");
}

template <MixableLoss L>
double evaluate(const L& loss, double theta, double x) {
    check_prediction(loss, theta);
    check_outcome(loss, x);
    return loss.raw(theta, x);
}

template <MixableLoss L>
void check_mix(const L& loss, std::span<const WeightedPrediction> mix) {
    if (mix.empty()) throw domain_error("weighted prediction set is empty");
    double total = 0.0;
    for (const auto& wp : mix) {
        if (!(wp.mass >= 0.0) || !std::isfinite(wp.mass)) throw domain_error("negative or non-finite mass");
        check_prediction(loss, wp.prediction);
        total += wp.mass;
    }
    if (std::abs(total - 1.0) > kMassTolerance) throw domain_error("masses do not sum to one");
}

template <MixableLoss L>
double substitute(const L& loss, std::span<const WeightedPrediction> mix) {
    check_mix(loss, mix);
    std::vector<double> preds;
    std::vector<double> logw;
    preds.reserve(mix.size());
    logw.reserve(mix.size());
    for (const auto& wp : mix) {
        preds.push_back(wp.prediction);
        logw.push_back(wp.mass > 0.0 ? std::log(wp.mass) : kNegInf);
    }
    return loss.substitute_log(preds, logw);
}

// exp(-alpha l(F(mix))) - sum_i P_i exp(-alpha l(theta_i)); nonnegative for a mixable loss.
template <MixableLoss L>
double mixability_slack(const L& loss, std::span<const WeightedPrediction> mix, double x) {
    const double theta_hat = substitute(loss, mix);
    const double a = loss.alpha();
    double rhs = 0.0;
    for (const auto& wp : mix) rhs += wp.mass * std::exp(-a * evaluate(loss, wp.prediction, x));
    return std::exp(-a * evaluate(loss, theta_hat, x)) - rhs;
}

// Cumulative loss of a fixed prediction over a sequence.
template <MixableLoss L>
double fixed_loss(const L& loss, double theta, std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += evaluate(loss, theta, x);
    return s;
}

}  // namespace mixdyn
