#pragma once

// Built-in self-checks on tiny instances: path enumeration against the
// mixture bound, transition audits and lazy/eager agreement.

#include <cmath>
#include <string>
#include <vector>

#include "mixdyn/eval.hpp"
#include "mixdyn/harness/rng.hpp"
#include "mixdyn/losses.hpp"
#include "mixdyn/mixture.hpp"
#include "mixdyn/schemes.hpp"

namespace mixdyn::harness {

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace detail {

inline std::vector<Scheme> tiny_schemes(Time horizon) {
    return {Scheme::lin(), Scheme::log(), Scheme::sub(SubParams{}, horizon)};
}

template <MixableLoss L, BaseAlgorithm B>
Check path_check(const Scheme& scheme, const L& loss, const B& base, const std::vector<std::vector<double>>& seqs,
                 const std::string& label) {
    Check c{"path-oracle " + std::string(scheme.name()) + " " + label, true, ""};
    double worst = std::numeric_limits<double>::infinity();
    std::int64_t paths = 0;
    for (const auto& xs : seqs) {
        const auto v = path_oracle(scheme, loss, base, xs);
        paths += v.paths;
        worst = std::min(worst, v.min_margin);
        c.pass = c.pass && v.pass;
    }
    c.detail = "paths=" + std::to_string(paths) + " min_margin=" + std::to_string(worst);
    return c;
}

template <MixableLoss L, BaseAlgorithm B>
Check engine_check(const Scheme& scheme, const L& loss, const B& base, const std::vector<double>& xs,
                   const std::string& label) {
    Check c{"engine " + std::string(scheme.name()) + " " + label, true, ""};
    const auto lazy = run_mixture(scheme, loss, base, xs, EngineMode::lazy, true);
    const auto eager = run_mixture(scheme, loss, base, xs, EngineMode::eager, true);
    double div = 0.0;
    bool same_jt = true;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        div = std::max(div, std::abs(lazy.steps[i].prediction - eager.steps[i].prediction));
        same_jt = same_jt && lazy.steps[i].jt == eager.steps[i].jt;
    }
    const auto& a = eager.audit;
    c.pass = div <= 1e-12 && same_jt && a.row_sum_violations == 0 && a.dead_reset_violations == 0 &&
             a.max_conservation_error <= 1e-12 && lazy.total_work <= eager.total_work;
    c.detail = "divergence=" + std::to_string(div) + " jt_match=" + (same_jt ? "yes" : "no") +
               " row_sum_violations=" + std::to_string(a.row_sum_violations) +
               " dead_reset_violations=" + std::to_string(a.dead_reset_violations);
    return c;
}

}  // namespace detail

inline std::vector<Check> verify_builtin(std::uint64_t seed = 7) {
    std::vector<Check> out;
    Rng rng(seed);
    std::vector<std::vector<double>> bits;
    std::vector<std::vector<double>> reals;
    for (Time T = 1; T <= 6; ++T) {
        for (int k = 0; k < 3; ++k) {
            std::vector<double> b, r;
            for (Time t = 0; t < T; ++t) {
                b.push_back(rng.bernoulli(0.5) ? 1.0 : 0.0);
                r.push_back(2.0 * rng.uniform01() - 1.0);
            }
            bits.push_back(std::move(b));
            reals.push_back(std::move(r));
        }
    }
    for (const auto& scheme : detail::tiny_schemes(256)) {
        out.push_back(detail::path_check(scheme, BernoulliLogLoss{}, KtEstimator{}, bits, "bernoulli/kt"));
        out.push_back(detail::path_check(scheme, SquareLoss{}, RunningMean{}, reals, "square/running-mean"));
    }
    std::vector<double> long_bits, long_reals;
    for (int t = 0; t < 256; ++t) {
        const double rate = (t / 64) % 2 == 0 ? 0.1 : 0.9;
        long_bits.push_back(rng.bernoulli(rate) ? 1.0 : 0.0);
        long_reals.push_back(std::clamp(rng.gaussian(rate - 0.5, 0.3), -1.0, 1.0));
    }
    for (const auto& scheme : detail::tiny_schemes(256)) {
        out.push_back(detail::engine_check(scheme, BernoulliLogLoss{}, KtEstimator{}, long_bits, "bernoulli/kt"));
        out.push_back(detail::engine_check(scheme, SquareLoss{}, RunningMean{}, long_reals, "square/running-mean"));
    }
    {
        Check c{"mixability square/bernoulli", true, ""};
        double worst_sq = std::numeric_limits<double>::infinity();
        double worst_be = 0.0;
        for (int k = 0; k < 2000; ++k) {
            const int n = 1 + static_cast<int>(rng.uniform01() * 6);
            std::vector<WeightedPrediction> sq, be;
            double total = 0.0;
            for (int i = 0; i < n; ++i) {
                const double m = rng.uniform01() + 1e-3;
                total += m;
                sq.push_back({2.0 * rng.uniform01() - 1.0, m});
                be.push_back({kBernoulliEps + (1.0 - 2.0 * kBernoulliEps) * rng.uniform01(), m});
            }
            for (int i = 0; i < n; ++i) {
                sq[static_cast<std::size_t>(i)].mass /= total;
                be[static_cast<std::size_t>(i)].mass /= total;
            }
            const double x = 2.0 * rng.uniform01() - 1.0;
            worst_sq = std::min(worst_sq, mixability_slack(SquareLoss{}, sq, x));
            worst_be = std::max(worst_be, std::abs(mixability_slack(BernoulliLogLoss{}, be, rng.bernoulli(0.5) ? 1.0 : 0.0)));
        }
        c.pass = worst_sq >= -1e-9 && worst_be <= 1e-12;
        c.detail = "min_square_slack=" + std::to_string(worst_sq) + " max_bernoulli_abs_slack=" + std::to_string(worst_be);
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace mixdyn::harness
