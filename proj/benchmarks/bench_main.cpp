#include "feel/ddpg.hpp"
#include "feel/environment.hpp"
#include "feel/neuro.hpp"
#include "feel/sim_core.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace feel;

void BM_EvaluateRound(benchmark::State& state) {
    SystemConfig sys;
    sys.num_devices = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    const auto fleet = sample_fleet(sys.num_devices, FleetBounds{}, rng);
    std::vector<DeviceState> states;
    for (const auto& p : fleet) {
        states.push_back({p.battery_capacity, p.base_freq_init, 1.0});
    }
    const AllocationAction action{std::vector<double>(sys.num_devices, 0.5),
                                  std::vector<double>(sys.num_devices, sys.total_bandwidth / sys.num_devices)};
    for (auto _ : state) {
        benchmark::DoNotOptimize(evaluate_round(fleet, states, action, sys));
    }
}
BENCHMARK(BM_EvaluateRound)->Arg(5)->Arg(20)->Arg(100);

neuro::MlpNet actor_net(std::size_t m) {
    using neuro::Activation;
    neuro::MlpNet net(1 + 3 * m, {64, 256}, {{m, Activation::sigmoid}, {m, Activation::softmax}});
    neuro::init_params(net, 3);
    return net;
}

void BM_ActorForward(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const auto net = actor_net(m);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(static_cast<Eigen::Index>(1 + 3 * m), 128);
    for (auto _ : state) {
        benchmark::DoNotOptimize(net.forward_batch(x));
    }
}
BENCHMARK(BM_ActorForward)->Arg(5)->Arg(20);

void BM_ActorBackward(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const auto net = actor_net(m);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(static_cast<Eigen::Index>(1 + 3 * m), 128);
    const Eigen::MatrixXd g = Eigen::MatrixXd::Random(static_cast<Eigen::Index>(2 * m), 128);
    for (auto _ : state) {
        benchmark::DoNotOptimize(net.backward(x, g));
    }
}
BENCHMARK(BM_ActorBackward)->Arg(5)->Arg(20);

void BM_TrainStep(benchmark::State& state) {
    SystemConfig sys;
    sys.num_devices = static_cast<std::size_t>(state.range(0));
    DdpgAgent agent(sys, AgentConfig{}, 5);
    Rng rng(5);
    const auto dim = 1 + 3 * sys.num_devices;
    for (int i = 0; i < 1000; ++i) {
        Transition t;
        t.state.resize(dim);
        t.next_state.resize(dim);
        t.action.resize(2 * sys.num_devices);
        for (auto* v : {&t.state, &t.next_state, &t.action}) {
            for (auto& x : *v) {
                x = rng.uniform();
            }
        }
        t.reward = rng.uniform();
        agent.store(std::move(t));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(agent.train_step(rng));
    }
}
BENCHMARK(BM_TrainStep)->Arg(5)->Arg(20);

void BM_EnvironmentStep(benchmark::State& state) {
    SystemConfig sys;
    sys.num_devices = 20;
    sys.max_rounds = 1 << 30;
    Environment env(sys);
    FleetBounds fb;
    fb.battery_lo = fb.battery_hi = 1e12;
    env.reset(fb, 9);
    const AllocationAction action{std::vector<double>(20, 0.5), std::vector<double>(20, sys.total_bandwidth / 20)};
    for (auto _ : state) {
        benchmark::DoNotOptimize(env.step(action));
    }
}
BENCHMARK(BM_EnvironmentStep);

}  // namespace

BENCHMARK_MAIN();
