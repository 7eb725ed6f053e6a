#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include "feel/neuro.hpp"
#include "feel/rng.hpp"
#include "feel/sim_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

namespace feel::oracle {

// Direct re-derivation of one round in extended precision, one device at a time.
struct Round {
    long double latency = 0;
    long double energy = 0;
    long double cost = 0;
    std::vector<long double> t_total;
    std::vector<long double> e_total;
};

inline Round round(const std::vector<DeviceProfile>& p, const std::vector<DeviceState>& s, const AllocationAction& a,
                   const SystemConfig& c) {
    Round o;
    for (std::size_t m = 0; m < p.size(); ++m) {
        const long double f = static_cast<long double>(a.freq_scale[m]) * s[m].base_freq;
        const long double work = static_cast<long double>(p[m].cycles_per_sample) * p[m].dataset_size;
        const long double t_loc = c.local_epochs * work / f;
        const long double snr = static_cast<long double>(p[m].tx_power) * s[m].channel_gain_pow / c.noise_power;
        const long double rate = a.bandwidth[m] * (std::log(1.0L + snr) / std::log(2.0L));
        const long double t_up = c.model_size / rate;
        long double e_loc = static_cast<long double>(p[m].chip_coeff) * work * f * f;
        if (c.energy_counts_epochs) {
            e_loc *= c.local_epochs;
        }
        const long double e_up = p[m].tx_power * t_up;
        o.t_total.push_back(t_loc + t_up);
        o.e_total.push_back(e_loc + e_up);
    }
    for (auto t : o.t_total) {
        o.latency = std::max(o.latency, t);
    }
    for (auto e : o.e_total) {
        o.energy += e;
    }
    o.cost = c.lambda_tradeoff * o.latency + (1.0L - c.lambda_tradeoff) * o.energy;
    return o;
}

inline double rel_err(double got, long double want) {
    return static_cast<double>(std::fabs((got - want) / want));
}

struct RoundInstance {
    SystemConfig config;
    std::vector<DeviceProfile> profiles;
    std::vector<DeviceState> states;
    AllocationAction action;
};

inline RoundInstance random_round(Rng& rng) {
    RoundInstance r;
    const std::size_t m = 1 + rng.below(30);
    r.config.num_devices = m;
    r.config.lambda_tradeoff = rng.uniform();
    r.config.local_epochs = 1 + static_cast<int>(rng.below(10));
    r.config.total_bandwidth = rng.uniform(1e6, 1e7);
    r.config.energy_counts_epochs = rng.uniform() < 0.5;
    std::vector<double> w(m);
    for (std::size_t i = 0; i < m; ++i) {
        r.profiles.push_back({static_cast<int>(i) + 1, rng.uniform(7e4, 2e5), rng.uniform(400, 600),
                              rng.uniform(1e-22, 2e-22), 5e-5, rng.uniform(2e4, 3e4), rng.uniform(1e7, 5e7)});
        r.states.push_back({r.profiles.back().battery_capacity, r.profiles.back().base_freq_init * rng.uniform(0.8, 1.2),
                            std::max(1e-3, rng.exponential(1.0))});
        r.action.freq_scale.push_back(rng.uniform(r.config.eta_min, 1.0));
        w[i] = rng.uniform(0.1, 1.0);
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double x : w) {
        r.action.bandwidth.push_back(x / total * r.config.total_bandwidth);
    }
    return r;
}

// Scalar probe L = sum_j <g_j, net(x_j)> for central finite differences.
inline double probe(const neuro::MlpNet& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& g) {
    return (net.forward_batch(x).array() * g.array()).sum();
}

inline bool grad_close(double analytic, double numeric) {
    const double err = std::abs(analytic - numeric);
    return err <= 1e-7 || err <= 1e-4 * std::max(std::abs(analytic), std::abs(numeric));
}

inline neuro::MlpNet random_net(Rng& rng, std::uint64_t seed) {
    using neuro::Activation;
    const std::size_t in = 1 + rng.below(5);
    std::vector<std::size_t> hidden;
    const auto depth = rng.below(3);
    for (std::uint64_t i = 0; i < depth; ++i) {
        hidden.push_back(2 + rng.below(6));
    }
    std::vector<neuro::HeadSpec> heads;
    const auto n_heads = 1 + rng.below(3);
    for (std::uint64_t i = 0; i < n_heads; ++i) {
        const auto kind = rng.below(3);
        heads.push_back({1 + rng.below(4), kind == 0   ? Activation::identity
                                           : kind == 1 ? Activation::sigmoid
                                                       : Activation::softmax});
    }
    neuro::MlpNet net(in, hidden, heads);
    neuro::init_params(net, seed);
    // Non-zero biases so ReLU kinks are not all at the same place.
    for (Eigen::Index i = 0; i < net.parameters().size(); ++i) {
        if (net.parameters()[i] == 0.0) {
            net.parameters()[i] = rng.uniform(-0.3, 0.3);
        }
    }
    return net;
}

struct GradMismatch {
    bool input = false;
    Eigen::Index index = -1;
    double analytic = 0.0;
    double numeric = 0.0;
};

// Checks every parameter and input gradient of one random fixture against
// central differences; returns the first mismatch, if any.
inline std::optional<GradMismatch> check_gradients(Rng& rng, std::uint64_t seed) {
    constexpr double h = 1e-5;
    const auto net = random_net(rng, seed);
    const auto in = static_cast<Eigen::Index>(net.input_dim());
    const auto out = static_cast<Eigen::Index>(net.output_dim());
    const Eigen::Index batch = 1 + static_cast<Eigen::Index>(rng.below(3));
    Eigen::MatrixXd x(in, batch), g(out, batch);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.0, 1.0);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.uniform(-1.0, 1.0);

    const auto grads = net.backward(x, g);
    for (Eigen::Index p = 0; p < net.parameters().size(); ++p) {
        auto plus = net;
        auto minus = net;
        plus.parameters()[p] += h;
        minus.parameters()[p] -= h;
        const double numeric = (probe(plus, x, g) - probe(minus, x, g)) / (2 * h);
        if (!grad_close(grads.params[p], numeric)) {
            return GradMismatch{false, p, grads.params[p], numeric};
        }
    }
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::MatrixXd xp = x, xm = x;
        xp.data()[i] += h;
        xm.data()[i] -= h;
        const double numeric = (probe(net, xp, g) - probe(net, xm, g)) / (2 * h);
        if (!grad_close(grads.input.data()[i], numeric)) {
            return GradMismatch{true, i, grads.input.data()[i], numeric};
        }
    }
    return std::nullopt;
}

}  // namespace feel::oracle
