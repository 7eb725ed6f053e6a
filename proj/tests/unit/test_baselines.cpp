#include "feel/baselines.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace feel {
namespace {

TEST(StaticPolicy, EmitsFactorAndEvenSplit) {
    SystemConfig s;
    const auto p = static_policy(0.5, s);
    Environment env(s);
    const auto a = p->act(env.reset(FleetBounds{}, 1));
    for (std::size_t i = 0; i < 20; ++i) {
        EXPECT_EQ(a.freq_scale[i], 0.5);
        EXPECT_EQ(a.bandwidth[i], 2.5e5);
    }
    EXPECT_NO_THROW(validate_action(a, s));
}

TEST(StaticPolicy, RejectsOutOfRangeFactors) {
    SystemConfig s;
    EXPECT_THROW(StaticPolicy(0.0, s), std::domain_error);
    EXPECT_THROW(StaticPolicy(1.01, s), std::domain_error);
    EXPECT_THROW(StaticPolicy(-0.3, s), std::domain_error);
    EXPECT_THROW(StaticPolicy(0.01, s), std::domain_error);
    EXPECT_NO_THROW(StaticPolicy(1.0, s));
    EXPECT_NO_THROW(StaticPolicy(s.eta_min, s));
}

TEST(EvenBandwidthWrapper, IdempotentOnStatic) {
    SystemConfig s;
    s.num_devices = 7;
    const auto inner = static_policy(0.4, s);
    const auto wrapped = even_bandwidth_wrapper(inner, s);
    Environment env(s);
    const auto obs = env.reset(FleetBounds{}, 2);
    const auto a = inner->act(obs);
    const auto b = wrapped->act(obs);
    EXPECT_EQ(a.freq_scale, b.freq_scale);
    EXPECT_EQ(a.bandwidth, b.bandwidth);
    EXPECT_EQ(wrapped->name(), "even-bw(static(0.4))");
    EXPECT_THROW(EvenBandwidthPolicy(nullptr, s), std::invalid_argument);
}

TEST(ActorPolicy, RejectsMismatchedNetwork) {
    SystemConfig s;
    s.num_devices = 3;
    neuro::MlpNet wrong(11, {4}, {{3, neuro::Activation::sigmoid}, {3, neuro::Activation::softmax}});
    EXPECT_THROW(ActorPolicy(wrong, s), std::invalid_argument);
}

TEST(Rollout, StaticSweepTrendsOnReferenceFleet) {
    SystemConfig s;
    Environment env(s);
    env.reset(FleetBounds{}, 2024);
    int prev_rounds = s.max_rounds + 1;
    double prev_energy = 0.0;
    double prev_latency = 1e300;
    for (int f = 1; f <= 10; ++f) {
        env.reset(7);
        std::vector<double> local_energy;
        std::vector<double> local_latency;
        const StaticPolicy p(f / 10.0, s);
        EpisodeStats stats;
        double e_sum = 0.0;
        double t_sum = 0.0;
        while (!env.done()) {
            const auto r = env.step(p.act(env.observe()));
            stats.add(r);
            if (r.reason != Termination::battery_exhausted) {
                for (std::size_t i = 0; i < s.num_devices; ++i) {
                    e_sum += r.outcome.e_local[i];
                    t_sum += r.outcome.t_local[i];
                }
            }
        }
        const auto sum = stats.summary();
        EXPECT_LE(sum.rounds_completed, prev_rounds) << "factor " << f / 10.0;
        const double mean_e = e_sum / sum.rounds_completed;
        const double mean_t = t_sum / sum.rounds_completed;
        EXPECT_GT(mean_e, prev_energy);
        EXPECT_LT(mean_t, prev_latency);
        prev_rounds = sum.rounds_completed;
        prev_energy = mean_e;
        prev_latency = mean_t;
    }
}

TEST(Rollout, WritesOneTraceRowPerPlayedRound) {
    SystemConfig s;
    s.num_devices = 2;
    s.max_rounds = 5;
    Environment env(s);
    env.reset(FleetBounds{}, 1);
    std::ostringstream os;
    TraceWriter trace(os, 2);
    trace.write_header();
    const auto sum = rollout(StaticPolicy(0.5, s), env, &trace, 3);
    EXPECT_EQ(sum.rounds_completed, 5);
    std::string line;
    std::istringstream in(os.str());
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
    }
    EXPECT_EQ(rows, 6);
}

}  // namespace
}  // namespace feel
