#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mixdyn/base.hpp"

using namespace mixdyn;

TEST(Base, KtInitAndUpdate) {
    const KtEstimator kt;
    auto s = base_init(kt);
    EXPECT_EQ(s.count, 0);
    EXPECT_DOUBLE_EQ(kt.predict(s), 0.5);
    s = base_update(kt, s, 1.0);
    EXPECT_DOUBLE_EQ(kt.predict(s), 0.75);
    s = base_update(kt, s, 0.0);
    EXPECT_DOUBLE_EQ(kt.predict(s), 0.5);
    s = base_update(kt, s, 1.0);
    EXPECT_DOUBLE_EQ(kt.predict(s), 2.5 / 4.0);
    EXPECT_EQ(s.count, 3);
    EXPECT_THROW(base_update(kt, s, 0.5), domain_error);
}

TEST(Base, RunningMeanInitAndUpdate) {
    const RunningMean rm;
    auto s = base_init(rm);
    EXPECT_DOUBLE_EQ(rm.predict(s), 0.0);
    s = base_update(rm, s, 1.0);
    EXPECT_DOUBLE_EQ(rm.predict(s), 1.0);
    s = base_update(rm, s, -0.5);
    EXPECT_DOUBLE_EQ(rm.predict(s), 0.25);
    EXPECT_THROW(base_update(rm, s, 1.5), domain_error);
}

TEST(Base, IncompatiblePairingRejected) {
    EXPECT_THROW(base_losses(KtEstimator{}, SquareLoss{}, std::vector<double>{0.0}), config_error);
    EXPECT_THROW(base_losses(RunningMean{}, BernoulliLogLoss{}, std::vector<double>{0.0}), config_error);
}

TEST(Base, KtRegretOnAllOnesIsExact) {
    // L_2(KT) = -log(1/2) - log(3/4) = log(8/3); the comparator sits at 1 - eps.
    const std::vector<double> xs{1.0, 1.0};
    const double expected = std::log(8.0 / 3.0) + 2.0 * std::log1p(-kBernoulliEps);
    EXPECT_NEAR(static_regret(KtEstimator{}, BernoulliLogLoss{}, xs), expected, 1e-14);
    EXPECT_NEAR(expected, 0.98082725301072624, 1e-14);
}

namespace {

std::vector<double> pattern(int kind, int T, std::mt19937_64& rng) {
    std::vector<double> xs;
    std::bernoulli_distribution coin(0.3);
    for (int t = 0; t < T; ++t) {
        switch (kind) {
            case 0: xs.push_back(coin(rng) ? 1.0 : 0.0); break;
            case 1: xs.push_back(0.0); break;
            case 2: xs.push_back(1.0); break;
            default: xs.push_back(t % 2 == 0 ? 1.0 : 0.0); break;
        }
    }
    return xs;
}

}  // namespace

TEST(BaseProperty, KtRegretIsLogarithmic) {
    std::mt19937_64 rng(5);
    for (int T : {1, 2, 10, 100, 1000, 5000}) {
        for (int kind = 0; kind < 4; ++kind) {
            const auto xs = pattern(kind, T, rng);
            const double r = static_regret(KtEstimator{}, BernoulliLogLoss{}, xs);
            EXPECT_LE(r, 0.5 * std::log(static_cast<double>(T)) + 1.0) << "T=" << T << " kind=" << kind;
        }
    }
}

TEST(BaseProperty, RunningMeanRegretIsLogarithmic) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int T : {10, 100, 1000, 10000}) {
        std::vector<double> xs;
        for (int t = 0; t < T; ++t) xs.push_back(u(rng));
        const double r = static_regret(RunningMean{}, SquareLoss{}, xs);
        EXPECT_LE(r, 4.0 * (1.0 + std::log(static_cast<double>(T))));
    }
}

TEST(Base, RestartOracleSumsSegmentRegrets) {
    std::mt19937_64 rng(7);
    std::bernoulli_distribution lo(0.1), hi(0.9);
    std::vector<double> xs;
    const std::vector<std::int64_t> lengths{30, 50, 20};
    for (std::size_t s = 0; s < lengths.size(); ++s)
        for (std::int64_t k = 0; k < lengths[s]; ++k) xs.push_back((s % 2 == 0 ? lo(rng) : hi(rng)) ? 1.0 : 0.0);
    const auto r = restart_oracle(KtEstimator{}, BernoulliLogLoss{}, xs, lengths);
    ASSERT_EQ(r.segment_regret.size(), 3u);
    double sum = 0.0;
    std::size_t off = 0;
    for (std::size_t s = 0; s < lengths.size(); ++s) {
        const std::span<const double> seg(xs.data() + off, static_cast<std::size_t>(lengths[s]));
        const double each = static_regret(KtEstimator{}, BernoulliLogLoss{}, seg);
        EXPECT_NEAR(r.segment_regret[s], each, 1e-12);
        sum += each;
        off += static_cast<std::size_t>(lengths[s]);
    }
    EXPECT_NEAR(r.total_regret, sum, 1e-12);
    EXPECT_THROW(restart_oracle(KtEstimator{}, BernoulliLogLoss{}, xs, std::vector<std::int64_t>{30, 50}),
                 domain_error);
}

TEST(Base, ReplayIsDeterministic) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> xs;
    for (int t = 0; t < 500; ++t) xs.push_back(u(rng));
    const RunningMean rm;
    auto a = rm.init();
    auto b = rm.init();
    for (double x : xs) rm.update(a, x);
    for (double x : xs) b = base_update(rm, b, x);
    EXPECT_EQ(a, b);
}

TEST(Base, CustomBaseCallbacks) {
    // Exponentially discounted mean as a registered base.
    const CustomBase ema(
        "ema", LossFamily::square, [] { return CustomBase::State{0, {0.0}, 0.0}; },
        [](CustomBase::State& s, double x, SideInfo) { s.stats[0] = 0.5 * s.stats[0] + 0.5 * x; },
        [](const CustomBase::State& s) { return s.stats[0]; });
    static_assert(BaseAlgorithm<CustomBase>);
    auto s = ema.init();
    ema.update(s, 1.0);
    ema.update(s, 1.0);
    EXPECT_DOUBLE_EQ(ema.predict(s), 0.75);
    EXPECT_EQ(s.count, 2);
    EXPECT_THROW(CustomBase("x", LossFamily::square, {}, {}, {}), config_error);
}
