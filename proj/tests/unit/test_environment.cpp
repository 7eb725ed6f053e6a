#include "feel/environment.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

namespace feel {
namespace {

SystemConfig small_config(std::size_t m, int k) {
    SystemConfig c;
    c.num_devices = m;
    c.max_rounds = k;
    return c;
}

AllocationAction even(const SystemConfig& c, double eta) {
    return {std::vector<double>(c.num_devices, eta),
            std::vector<double>(c.num_devices, c.total_bandwidth / static_cast<double>(c.num_devices))};
}

DeviceProfile device(int id, double battery) { return {id, 1.35e5, 500.0, 1.5e-22, 5e-5, battery, 3e7}; }

TEST(Environment, ResetIsDeterministic) {
    Environment a(small_config(20, 1000));
    Environment b(small_config(20, 1000));
    const auto oa = a.reset(FleetBounds{}, 42);
    const auto ob = b.reset(FleetBounds{}, 42);
    EXPECT_EQ(oa.flatten(), ob.flatten());
    EXPECT_EQ(oa.size(), 61u);
    EXPECT_EQ(oa.flatten().size(), 61u);
    for (std::size_t i = 0; i < 20; ++i) {
        EXPECT_EQ(a.profiles()[i].battery_capacity, b.profiles()[i].battery_capacity);
        EXPECT_EQ(a.profiles()[i].id, static_cast<int>(i) + 1);
    }
    const auto again = a.reset(FleetBounds{}, 42);
    EXPECT_EQ(again.flatten(), oa.flatten());
}

TEST(Environment, SampledFleetRespectsBounds) {
    Environment env(small_config(200, 10));
    env.reset(FleetBounds{}, 3);
    for (const auto& p : env.profiles()) {
        EXPECT_GE(p.battery_capacity, 2e4);
        EXPECT_LT(p.battery_capacity, 3e4);
        EXPECT_GE(p.base_freq_init, 1e7);
        EXPECT_LT(p.base_freq_init, 5e7);
        EXPECT_GE(p.cycles_per_sample, 7e4);
        EXPECT_LT(p.cycles_per_sample, 2e5);
        EXPECT_GE(p.dataset_size, 400.0);
        EXPECT_LT(p.dataset_size, 600.0);
        EXPECT_GE(p.chip_coeff, 1e-22);
        EXPECT_LT(p.chip_coeff, 2e-22);
        EXPECT_EQ(p.tx_power, 5e-5);
    }
    FleetBounds bad;
    bad.freq_lo = 6e7;
    EXPECT_THROW(env.reset(bad, 1), std::invalid_argument);
}

TEST(Environment, ExplicitFleetIsEchoed) {
    const auto c = small_config(3, 10);
    Environment env(c);
    std::vector<DeviceProfile> fleet{device(1, 1e4), device(2, 2e4), device(3, 3e4)};
    fleet[1].base_freq_init = 1.5e7;
    const auto obs = env.reset(fleet, 5);
    EXPECT_EQ(obs.round, 0.1);
    EXPECT_EQ(obs.batteries, std::vector<double>(3, 1.0));
    EXPECT_EQ(obs.base_freqs, (std::vector<double>{1.0, 0.5, 1.0}));
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(env.profiles()[i].battery_capacity, fleet[i].battery_capacity);
        EXPECT_EQ(obs.channel_gains[i], std::min(env.states()[i].channel_gain_pow, 5.0) / 5.0);
    }
    EXPECT_THROW(env.reset(std::vector<DeviceProfile>{device(1, 1e4)}, 5), std::invalid_argument);
}

TEST(Environment, ObservationRoundAndClip) {
    Environment env(small_config(20, 1000));
    auto obs = env.reset(FleetBounds{}, 11);
    EXPECT_DOUBLE_EQ(obs.round, 0.001);
    bool saw_clip = false;
    for (int k = 0; k < 50 && !env.done(); ++k) {
        obs = env.step(even(env.config(), 0.2)).observation;
        for (std::size_t i = 0; i < 20; ++i) {
            const double g = env.states()[i].channel_gain_pow;
            EXPECT_GE(g, 1e-3);
            EXPECT_GE(obs.channel_gains[i], 0.0);
            EXPECT_LE(obs.channel_gains[i], 1.0);
            if (g > 5.0) {
                saw_clip = true;
                EXPECT_EQ(obs.channel_gains[i], 1.0);
            }
        }
    }
    EXPECT_TRUE(saw_clip);
}

TEST(Environment, DynamicsStayInJitterRange) {
    Environment env(small_config(10, 100));
    env.reset(FleetBounds{}, 8);
    while (!env.done()) {
        env.step(even(env.config(), 0.1));
        for (std::size_t i = 0; i < 10; ++i) {
            const double ratio = env.states()[i].base_freq / env.profiles()[i].base_freq_init;
            EXPECT_GE(ratio, 0.8 - 1e-15);
            EXPECT_LE(ratio, 1.2 + 1e-15);
        }
    }
}

TEST(Environment, ZeroCostScaleRewardsCountRounds) {
    auto c = small_config(4, 50);
    c.reward_cost_scale = 0.0;
    Environment env(c);
    env.reset(FleetBounds{}, 1);
    double total = 0.0;
    int k = 1;
    while (!env.done()) {
        const auto r = env.step(even(c, 0.3));
        EXPECT_EQ(r.reward, static_cast<double>(k));
        total += r.reward;
        ++k;
    }
    EXPECT_EQ(env.rounds_completed(), 50);
    EXPECT_EQ(total, 50.0 * 51.0 / 2.0);
}

TEST(Environment, RewardSubtractsScaledCost) {
    auto c = small_config(1, 5);
    Environment env(c);
    env.reset(std::vector<DeviceProfile>{device(1, 1e6)}, 2);
    const DeviceState before = env.states()[0];
    const auto r = env.step(even(c, 1.0));
    const double rate = 5e6 * std::log2(1.0 + 5e-5 * before.channel_gain_pow / 1e-9);
    const double t = 11.25 + 8e7 / rate;
    const double e = 45.5625 + 5e-5 * 8e7 / rate;
    EXPECT_NEAR(r.reward, 1.0 - (0.5 * t + 0.5 * e), 1e-10);
    EXPECT_NEAR(env.states()[0].battery_remaining, 1e6 - e, 1e-8);
}

TEST(Environment, ExactBatteryCompletesRoundThenTerminates) {
    auto c = small_config(1, 10);
    Environment probe(c);
    probe.reset(std::vector<DeviceProfile>{device(1, 1e6)}, 9);
    const auto cost = evaluate_round(probe.profiles(), probe.states(), even(c, 1.0), c);

    Environment env(c);
    env.reset(std::vector<DeviceProfile>{device(1, cost.e_total[0])}, 9);
    const auto first = env.step(even(c, 1.0));
    EXPECT_FALSE(first.done);
    EXPECT_EQ(env.states()[0].battery_remaining, 0.0);
    EXPECT_EQ(env.rounds_completed(), 1);

    const auto second = env.step(even(c, 1.0));
    EXPECT_TRUE(second.done);
    EXPECT_EQ(second.reason, Termination::battery_exhausted);
    EXPECT_EQ(second.reward, 0.0);
    EXPECT_EQ(env.states()[0].battery_remaining, 0.0);
    EXPECT_EQ(env.rounds_completed(), 1);
    EXPECT_THROW(env.step(even(c, 1.0)), std::logic_error);
}

TEST(Environment, TerminationOnRound501CountsFiveHundred) {
    auto c = small_config(2, 1000);
    std::vector<DeviceProfile> fleet{device(1, 1e9), device(2, 1e9)};
    Environment probe(c);
    probe.reset(fleet, 77);
    std::vector<double> drawn0;
    std::vector<double> drawn1;
    for (int k = 0; k < 501; ++k) {
        const auto r = probe.step(even(c, 0.6));
        drawn0.push_back(r.outcome.e_total[0]);
        drawn1.push_back(r.outcome.e_total[1]);
    }
    double spent = 0.0;
    for (int k = 0; k < 500; ++k) {
        spent += drawn0[static_cast<std::size_t>(k)];
    }
    fleet[0].battery_capacity = spent + 0.5 * drawn0[500];

    Environment env(c);
    EXPECT_EQ(env.rounds_completed(), 0);
    env.reset(fleet, 77);
    EXPECT_EQ(env.rounds_completed(), 0);
    StepResult last;
    while (!env.done()) {
        last = env.step(even(c, 0.6));
    }
    EXPECT_EQ(last.reason, Termination::battery_exhausted);
    EXPECT_EQ(env.rounds_completed(), 500);
}

TEST(Environment, FullEpisodeReachesMaxRounds) {
    Environment env(small_config(20, 1000));
    env.reset(FleetBounds{}, 4);
    StepResult last;
    while (!env.done()) {
        last = env.step(even(env.config(), 0.1));
    }
    EXPECT_EQ(last.reason, Termination::max_rounds_reached);
    EXPECT_EQ(env.rounds_completed(), 1000);
}

TEST(Environment, SameSeedSameTrajectory) {
    const auto c = small_config(5, 100);
    Environment a(c);
    Environment b(c);
    a.reset(FleetBounds{}, 13);
    b.reset(FleetBounds{}, 13);
    while (!a.done()) {
        const auto ra = a.step(even(c, 0.5));
        const auto rb = b.step(even(c, 0.5));
        EXPECT_EQ(ra.reward, rb.reward);
        EXPECT_EQ(ra.observation.flatten(), rb.observation.flatten());
    }
    EXPECT_TRUE(b.done());
}

TEST(Environment, GuardsAndInvalidActions) {
    const auto c = small_config(2, 10);
    Environment env(c);
    EXPECT_THROW(env.step(even(c, 0.5)), std::logic_error);
    EXPECT_THROW(env.reset(1), std::logic_error);
    env.reset(FleetBounds{}, 1);
    auto bad = even(c, 0.5);
    bad.freq_scale[0] = 1.5;
    EXPECT_THROW(env.step(bad), std::invalid_argument);
    auto bad_config = c;
    bad_config.local_epochs = 0;
    EXPECT_THROW(Environment{bad_config}, std::invalid_argument);
}

TEST(Environment, TerminationNames) {
    EXPECT_EQ(to_string(Termination::battery_exhausted), "battery_exhausted");
    EXPECT_EQ(to_string(Termination::max_rounds_reached), "max_rounds_reached");
    EXPECT_EQ(to_string(Termination::none), "none");
}

}  // namespace
}  // namespace feel
