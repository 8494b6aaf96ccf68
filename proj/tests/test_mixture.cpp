#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "mixdyn/mixture.hpp"
#include "oracles.hpp"

using namespace mixdyn;

TEST(Transition, WeightCases) {
    EXPECT_EQ(transition_weight(3, true, false, 3), (TransitionWeight{2, 3}));
    EXPECT_EQ(transition_weight(3, false, true, 1), (TransitionWeight{1, 3}));
    EXPECT_EQ(transition_weight(3, false, false, 1).numerator, 0);
    EXPECT_EQ(transition_weight(3, false, false, 5).numerator, 0);
    EXPECT_EQ(transition_weight(1, true, true, 1), (TransitionWeight{1, 1}));
    EXPECT_EQ(transition_weight(1, true, false, 1).numerator, 0);
    EXPECT_THROW(transition_weight(0, true, false, 1), domain_error);
}

TEST(TransitionProperty, RowsSumToOne) {
    for (Time r = 1; r <= 50; ++r) {
        const auto stay = transition_weight(r, true, false, r);
        const auto jump = transition_weight(r, false, true, 1);
        if (r == 1) {
            EXPECT_EQ(jump.numerator, jump.denominator);
        } else {
            EXPECT_EQ(stay.numerator + jump.numerator, r);
        }
    }
}

TEST(Mixture, InitialWeightsAreUniformOverFirstBirths) {
    Mixture sub(Scheme::sub(SubParams{}, 100), BernoulliLogLoss{}, KtEstimator{});
    const auto w = sub.normalized_weights();
    ASSERT_EQ(w.size(), 2u);
    EXPECT_NEAR(w[0], 0.5, 1e-15);
    EXPECT_NEAR(w[1], 0.5, 1e-15);
    EXPECT_DOUBLE_EQ(sub.prediction(), 0.5);

    Mixture lin(Scheme::lin(), SquareLoss{}, RunningMean{});
    ASSERT_EQ(lin.normalized_weights().size(), 1u);
    EXPECT_DOUBLE_EQ(lin.normalized_weights()[0], 1.0);
    EXPECT_DOUBLE_EQ(lin.prediction(), 0.0);
}

TEST(Mixture, LinSecondStepSplitsEvenly) {
    Mixture lin(Scheme::lin(), BernoulliLogLoss{}, KtEstimator{}, EngineMode::eager);
    lin.step(1.0);
    const auto w = lin.normalized_weights();
    ASSERT_EQ(w.size(), 2u);
    EXPECT_NEAR(w[0], 0.5, 1e-15);
    EXPECT_NEAR(w[1], 0.5, 1e-15);
    // Old expert predicts 0.75 after one 1, newborn predicts 0.5.
    EXPECT_NEAR(lin.prediction(), 0.625, 1e-15);
    EXPECT_EQ(lin.jt().start, 2);
}

TEST(Mixture, IncompatibleBaseRejected) {
    EXPECT_THROW((Mixture(Scheme::lin(), SquareLoss{}, KtEstimator{})), config_error);
}

TEST(Mixture, OutcomeOutsideDomainRejected) {
    Mixture m(Scheme::log(), BernoulliLogLoss{}, KtEstimator{});
    EXPECT_THROW(m.step(0.5), domain_error);
}

TEST(Mixture, ResettingNonJumpTargetStaysDeadUntilChosen) {
    Mixture m(Scheme::log(), BernoulliLogLoss{}, KtEstimator{}, EngineMode::eager);
    auto weight_of = [&](Time period) {
        for (const auto& e : m.experts())
            if (e.spec.period == period) return e.log_weight;
        return std::numeric_limits<double>::quiet_NaN();
    };
    m.step(1.0);  // -> t = 2, period 2 born as J
    EXPECT_TRUE(std::isfinite(weight_of(2)));
    m.step(0.0);  // -> t = 3
    m.step(1.0);  // -> t = 4: periods 1, 2, 4 reset, J has period 4
    EXPECT_EQ(m.jt().period, 4);
    EXPECT_EQ(weight_of(1), kNegInf);
    EXPECT_EQ(weight_of(2), kNegInf);
    m.step(1.0);  // -> t = 5: only period 1 resets, and it is J
    EXPECT_EQ(weight_of(2), kNegInf);
    EXPECT_TRUE(std::isfinite(weight_of(1)));
    m.step(1.0);  // -> t = 6: J has period 2
    EXPECT_EQ(m.jt().period, 2);
    EXPECT_TRUE(std::isfinite(weight_of(2)));
}

TEST(Mixture, ExhaustsAtLadderEnd) {
    Mixture m(Scheme::sub(SubParams{}, 16), BernoulliLogLoss{}, KtEstimator{});
    for (int t = 1; t <= 26; ++t) m.step(t % 2 == 0 ? 1.0 : 0.0);
    EXPECT_TRUE(m.exhausted());
    EXPECT_THROW(m.step(1.0), config_error);
}

namespace {

std::vector<double> bits(std::uint64_t seed, int T) {
    std::mt19937_64 rng(seed);
    std::vector<double> xs;
    for (int t = 0; t < T; ++t) {
        const double p = (t / 37) % 2 == 0 ? 0.15 : 0.85;
        xs.push_back(std::bernoulli_distribution(p)(rng) ? 1.0 : 0.0);
    }
    return xs;
}

std::vector<double> reals(std::uint64_t seed, int T) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.3);
    std::vector<double> xs;
    for (int t = 0; t < T; ++t) xs.push_back(std::clamp(((t / 29) % 2 == 0 ? -0.5 : 0.6) + g(rng), -1.0, 1.0));
    return xs;
}

std::vector<Scheme> all_schemes(Time T) { return {Scheme::lin(), Scheme::log(), Scheme::sub(SubParams{}, T)}; }

std::vector<oracle::Expert> enumerate(const Scheme& s, Time T) {
    switch (s.kind()) {
        case SchemeKind::lin: return oracle::enumerate_lin(T);
        case SchemeKind::log: return oracle::enumerate_log(T);
        case SchemeKind::sub: break;
    }
    const auto& f = s.ladder();
    std::vector<Time> fv, av, bv;
    for (std::size_t n = 1; n <= f.size(); ++n) {
        fv.push_back(f.period(n));
        av.push_back(f.alpha(n));
        bv.push_back(f.beta(n));
    }
    return oracle::enumerate_sub(T, fv, av, bv);
}

}  // namespace

TEST(MixtureProperty, MatchesDenseReferenceBernoulli) {
    const int T = 80;
    const auto xs = bits(21, T);
    for (const auto& scheme : all_schemes(T)) {
        const auto trace = run_mixture(scheme, BernoulliLogLoss{}, KtEstimator{}, xs);
        struct St { double n = 0, k = 0; };
        const auto ref = oracle::dense_mixture<St>(
            enumerate(scheme, T), xs, 1.0L, [] { return St{}; },
            [](St& s, double x) { s.n += 1; s.k += x; },
            [](const St& s) { return (s.k + 0.5) / (s.n + 1.0); },
            [](double th, double x) { return x == 1.0 ? -std::log(th) : -std::log1p(-th); },
            [](const std::vector<std::pair<double, long double>>& mix) {
                long double m = 0.0L;
                for (const auto& [p, w] : mix) m += w * p;
                return m;
            });
        for (int t = 0; t < T; ++t)
            ASSERT_NEAR(trace.steps[static_cast<std::size_t>(t)].prediction, static_cast<double>(ref[static_cast<std::size_t>(t)]), 1e-12)
                << scheme.name() << " t=" << t + 1;
    }
}

TEST(MixtureProperty, MatchesDenseReferenceSquare) {
    const int T = 80;
    const auto xs = reals(22, T);
    for (const auto& scheme : all_schemes(T)) {
        const auto trace = run_mixture(scheme, SquareLoss{}, RunningMean{}, xs);
        struct St { double n = 0, sum = 0; };
        const auto ref = oracle::dense_mixture<St>(
            enumerate(scheme, T), xs, 0.5L, [] { return St{}; },
            [](St& s, double x) { s.n += 1; s.sum += x; },
            [](const St& s) { return s.n == 0 ? 0.0 : s.sum / s.n; },
            [](double th, double x) { return (th - x) * (th - x); },
            [](const std::vector<std::pair<double, long double>>& mix) {
                long double up = 0.0L, dn = 0.0L;
                for (const auto& [p, w] : mix) {
                    up += w * std::exp(-0.5L * (p - 1.0L) * (p - 1.0L));
                    dn += w * std::exp(-0.5L * (p + 1.0L) * (p + 1.0L));
                }
                return 0.5L * (std::log(up) - std::log(dn));
            });
        for (int t = 0; t < T; ++t)
            ASSERT_NEAR(trace.steps[static_cast<std::size_t>(t)].prediction, static_cast<double>(ref[static_cast<std::size_t>(t)]), 1e-12)
                << scheme.name() << " t=" << t + 1;
    }
}

TEST(MixtureProperty, WeightsStayNormalized) {
    const auto xs = bits(23, 600);
    for (const auto& scheme : all_schemes(600)) {
        Mixture m(scheme, BernoulliLogLoss{}, KtEstimator{}, EngineMode::lazy);
        for (double x : xs) {
            m.step(x);
            double s = 0.0;
            for (double w : m.normalized_weights()) s += w;
            ASSERT_NEAR(s, 1.0, 1e-12) << scheme.name() << " t=" << m.time();
        }
    }
}

TEST(MixtureProperty, LazyAndEagerAgreeBitForBit) {
    const int T = 3000;
    const auto b = bits(24, T);
    const auto r = reals(25, T);
    for (const auto& scheme : all_schemes(T)) {
        const auto lb = run_mixture(scheme, BernoulliLogLoss{}, KtEstimator{}, b, EngineMode::lazy);
        const auto eb = run_mixture(scheme, BernoulliLogLoss{}, KtEstimator{}, b, EngineMode::eager);
        const auto ls = run_mixture(scheme, SquareLoss{}, RunningMean{}, r, EngineMode::lazy);
        const auto es = run_mixture(scheme, SquareLoss{}, RunningMean{}, r, EngineMode::eager);
        for (std::size_t t = 0; t < static_cast<std::size_t>(T); ++t) {
            ASSERT_EQ(lb.steps[t].prediction, eb.steps[t].prediction) << scheme.name() << " t=" << t + 1;
            ASSERT_EQ(ls.steps[t].prediction, es.steps[t].prediction) << scheme.name() << " t=" << t + 1;
            ASSERT_EQ(lb.steps[t].jt, eb.steps[t].jt);
            ASSERT_LE(lb.steps[t].live, eb.steps[t].live);
        }
        EXPECT_LE(lb.total_work, eb.total_work);
    }
}

TEST(MixtureProperty, AuditFindsNoViolations) {
    const auto xs = bits(26, 1024);
    for (const auto& scheme : all_schemes(1024)) {
        for (auto mode : {EngineMode::lazy, EngineMode::eager}) {
            const auto trace = run_mixture(scheme, BernoulliLogLoss{}, KtEstimator{}, xs, mode, true);
            EXPECT_GT(trace.audit.sources_checked, 0);
            EXPECT_EQ(trace.audit.row_sum_violations, 0);
            EXPECT_EQ(trace.audit.dead_reset_violations, 0);
            EXPECT_LE(trace.audit.max_conservation_error, 1e-12);
        }
    }
}

TEST(Mixture, EagerWorkCounts) {
    const int T = 500;
    const auto xs = bits(27, T);
    const auto lin = run_mixture(Scheme::lin(), BernoulliLogLoss{}, KtEstimator{}, xs, EngineMode::eager);
    EXPECT_EQ(lin.total_work, std::int64_t{T} * (T + 1) / 2);
    const auto log = run_mixture(Scheme::log(), BernoulliLogLoss{}, KtEstimator{}, xs, EngineMode::eager);
    std::int64_t expected = 0;
    for (Time t = 1; t <= T; ++t) expected += Scheme::log().expert_count(t);
    EXPECT_EQ(log.total_work, expected);
    EXPECT_EQ(log.created, Scheme::log().expert_count(T));
}

TEST(Mixture, MixtureLossBeatsWorstExpertBound) {
    // With one expert the mixture is that expert: lin at T = 1.
    const std::vector<double> xs{1.0};
    const auto trace = run_mixture(Scheme::lin(), BernoulliLogLoss{}, KtEstimator{}, xs);
    EXPECT_NEAR(trace.cumulative_loss, std::log(2.0), 1e-15);
}

TEST(MixtureProperty, PredictionIgnoresStorageOrder) {
    std::mt19937_64 rng(29);
    const auto check = [&](auto& mix, const auto& loss) {
        std::vector<std::size_t> order(mix.experts().size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<double> preds, logw;
        for (auto i : order) {
            preds.push_back(mix.experts()[i].state.prediction);
            logw.push_back(mix.experts()[i].log_weight);
        }
        ASSERT_NEAR(loss.substitute_log(preds, logw), mix.prediction(), 1e-12);
    };
    Mixture sq(Scheme::sub(SubParams{}, 300), SquareLoss{}, RunningMean{});
    Mixture be(Scheme::sub(SubParams{}, 300), BernoulliLogLoss{}, KtEstimator{});
    const auto xs = bits(28, 300);
    for (double x : xs) {
        sq.step(x);
        be.step(x);
        check(sq, SquareLoss{});
        check(be, BernoulliLogLoss{});
    }
}

TEST(Mixture, LazyLiveSetWithinEagerCount) {
    const auto xs = bits(30, 64);
    const auto lazy = run_mixture(Scheme::log(), BernoulliLogLoss{}, KtEstimator{}, xs, EngineMode::lazy);
    const auto eager = run_mixture(Scheme::log(), BernoulliLogLoss{}, KtEstimator{}, xs, EngineMode::eager);
    EXPECT_EQ(eager.created, 7);
    for (const auto& s : lazy.steps) EXPECT_LE(s.live, 7);
    const auto lin = run_mixture(Scheme::lin(), BernoulliLogLoss{}, KtEstimator{}, bits(31, 100), EngineMode::eager);
    EXPECT_EQ(lin.created, 100);
}
