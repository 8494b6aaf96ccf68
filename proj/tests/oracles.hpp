#pragma once

// Test-only reference implementations. Nothing here calls into the engine's
// closed-form calendar or log-domain code paths.

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "mixdyn/schemes.hpp"

namespace oracle {

using mixdyn::Time;

struct Expert {
    Time period;  // 0 encodes infinity
    Time start;
};

inline Time runtime(Time t, const Expert& e) { return e.period == 0 ? t - e.start + 1 : (t - e.start) % e.period + 1; }

// Experts with s <= T listed by direct enumeration of each scheme's definition.
inline std::vector<Expert> enumerate_lin(Time T) {
    std::vector<Expert> out;
    for (Time s = 1; s <= T; ++s) out.push_back({0, s});
    return out;
}

inline std::vector<Expert> enumerate_log(Time T) {
    std::vector<Expert> out;
    for (Time p = 1; p <= T; p *= 2) out.push_back({p, p});
    return out;
}

// f: ladder f_1..f_N; alpha/beta by floor division unless given.
inline std::vector<Expert> enumerate_sub(Time T, const std::vector<Time>& f, const std::vector<Time>& alpha,
                                         const std::vector<Time>& beta) {
    std::vector<Expert> out{{1, 1}};
    for (std::size_t n = 1; n < f.size(); ++n)
        for (Time j = 1; j <= alpha[n]; ++j) {
            const Time s = beta[n] + j * f[n - 1];
            if (s <= T) out.push_back({f[n], s});
        }
    return out;
}

// Brute-force "resets at t": born at t, or born earlier with runtime(t) == 1.
inline bool resets_at(Time t, const Expert& e) {
    if (e.start > t) return false;
    if (e.start == t) return true;
    return e.period != 0 && runtime(t, e) == 1;
}

// J_t by scanning all experts: largest period (infinite counts largest), then smallest start.
inline std::size_t jt_index(Time t, const std::vector<Expert>& experts) {
    std::size_t best = experts.size();
    for (std::size_t i = 0; i < experts.size(); ++i) {
        if (!resets_at(t, experts[i])) continue;
        if (best == experts.size()) {
            best = i;
            continue;
        }
        const auto key = [](const Expert& e) { return e.period == 0 ? std::numeric_limits<Time>::max() : e.period; };
        if (key(experts[i]) > key(experts[best]) ||
            (key(experts[i]) == key(experts[best]) && experts[i].start < experts[best].start))
            best = i;
    }
    return best;
}

// Dense mixture over every expert up to T in linear-domain long double with
// an explicit tau matrix. Predict/update callbacks define the base and loss.
template <class BaseState, class Init, class Update, class Predict, class Loss, class Substitute>
std::vector<long double> dense_mixture(const std::vector<Expert>& experts, const std::vector<double>& xs,
                                       long double alpha, Init init, Update update, Predict predict, Loss loss,
                                       Substitute substitute) {
    const std::size_t n = experts.size();
    const Time T = static_cast<Time>(xs.size());
    std::vector<long double> w(n, 0.0L);
    std::vector<BaseState> states(n, init());
    std::size_t born1 = 0;
    for (const auto& e : experts) born1 += e.start == 1 ? 1 : 0;
    for (std::size_t i = 0; i < n; ++i)
        if (experts[i].start == 1) w[i] = 1.0L / static_cast<long double>(born1);
    std::vector<long double> preds;
    for (Time t = 1; t <= T; ++t) {
        long double total = 0.0L;
        for (std::size_t i = 0; i < n; ++i) total += w[i];
        std::vector<std::pair<double, long double>> mix;
        for (std::size_t i = 0; i < n; ++i)
            if (experts[i].start <= t && w[i] > 0.0L) mix.push_back({predict(states[i]), w[i] / total});
        preds.push_back(substitute(mix));
        const double x = xs[static_cast<std::size_t>(t - 1)];
        std::vector<long double> charged(n, 0.0L);
        for (std::size_t i = 0; i < n; ++i) {
            if (experts[i].start > t) continue;
            charged[i] = w[i] * std::exp(-alpha * static_cast<long double>(loss(predict(states[i]), x)));
            update(states[i], x);
        }
        if (t == T) break;
        const Time nt = t + 1;
        const std::size_t j = jt_index(nt, experts);
        std::vector<long double> next(n, 0.0L);
        for (std::size_t i = 0; i < n; ++i) {
            if (experts[i].start > t) continue;
            const Time ri = runtime(nt, experts[i]);
            for (std::size_t k = 0; k < n; ++k) {
                if (experts[k].start > nt) continue;
                const Time rk = runtime(nt, experts[k]);
                long double tau = 0.0L;
                if (rk == 1 && k == j) tau = 1.0L / static_cast<long double>(ri);
                else if (i == k && ri != 1) tau = static_cast<long double>(ri - 1) / static_cast<long double>(ri);
                next[k] += charged[i] * tau;
            }
        }
        for (std::size_t k = 0; k < n; ++k) {
            if (experts[k].start > nt) continue;
            if (runtime(nt, experts[k]) == 1) states[k] = init();
        }
        long double s = 0.0L;
        for (auto v : next) s += v;
        for (auto& v : next) v /= s;
        w = std::move(next);
    }
    return preds;
}

}  // namespace oracle
