#include "feel/fedavg.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

namespace feel::fedavg {
namespace {

ClientDataset line_data(int id, std::vector<double> xs, double slope) {
    ClientDataset d;
    d.client_id = id;
    d.features.resize(static_cast<Eigen::Index>(xs.size()), 1);
    d.labels.resize(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        d.features(static_cast<Eigen::Index>(i), 0) = xs[i];
        d.labels[static_cast<Eigen::Index>(i)] = slope * xs[i];
    }
    return d;
}

GlobalModel model_of(std::initializer_list<double> w) {
    GlobalModel g;
    g.weights.resize(static_cast<Eigen::Index>(w.size()));
    Eigen::Index i = 0;
    for (double x : w) {
        g.weights[i++] = x;
    }
    return g;
}

TEST(LocalUpdate, ZeroLearningRateKeepsWeights) {
    const auto d = line_data(1, {1.0, 2.0, 3.0}, 2.0);
    const auto g = model_of({0.7});
    EXPECT_EQ(local_update(g, d, 0.0, 5), g.weights);
}

TEST(LocalUpdate, MovesMonotonicallyTowardSlope) {
    // Loss (1/2n) sum (w x - 2x)^2 has gradient (w - 2) * mean(x^2), so each
    // step contracts the error by (1 - alpha * mean(x^2)).
    const auto d = line_data(1, {1.0, 2.0, 3.0}, 2.0);
    const double mean_sq = (1.0 + 4.0 + 9.0) / 3.0;
    const double alpha = 0.01;
    GlobalModel g = model_of({0.0});
    double prev = 0.0;
    for (int e = 1; e <= 20; ++e) {
        const double w = local_update(g, d, alpha, e)[0];
        EXPECT_GT(w, prev);
        EXPECT_LT(w, 2.0);
        EXPECT_NEAR(w, 2.0 - 2.0 * std::pow(1.0 - alpha * mean_sq, e), 1e-12);
        prev = w;
    }
}

TEST(LocalUpdate, OptimumIsAFixedPoint) {
    const auto d = line_data(1, {-1.0, 0.5, 4.0}, -3.0);
    const auto g = model_of({-3.0});
    EXPECT_EQ(client_gradient(g.weights, d)[0], 0.0);
    EXPECT_EQ(local_update(g, d, 0.1, 10), g.weights);
}

TEST(LocalUpdate, DivergenceGuardTrips) {
    const auto d = line_data(1, {10.0, 20.0}, 1.0);
    EXPECT_THROW((void)local_update(model_of({0.0}), d, 1.0, 50), DivergenceError);
    EXPECT_THROW((void)local_update(model_of({0.0, 1.0}), d, 0.1, 1), std::invalid_argument);
    EXPECT_THROW((void)local_update(model_of({0.0}), d, -0.1, 1), std::invalid_argument);
}

TEST(Aggregate, WeightedMean) {
    const auto g = aggregate({{1, model_of({0.0}).weights, 1}, {2, model_of({1.0}).weights, 3}});
    EXPECT_EQ(g.weights[0], 0.75);
}

TEST(Aggregate, IdenticalLocalsAreReturned) {
    const Eigen::VectorXd w = model_of({0.3, -1.7, 2.5}).weights;
    const auto g = aggregate({{1, w, 17}, {2, w, 5}, {3, w, 31}});
    for (Eigen::Index i = 0; i < 3; ++i) {
        EXPECT_NEAR(g.weights[i], w[i], 4e-16 * std::fabs(w[i]));
    }
}

TEST(Aggregate, PermutationGivesBitIdenticalResult) {
    Rng rng(5);
    std::vector<LocalModel> locals;
    for (int id = 1; id <= 12; ++id) {
        Eigen::VectorXd w(4);
        for (Eigen::Index i = 0; i < 4; ++i) {
            w[i] = rng.normal() * 1e3;
        }
        locals.push_back({id, w, 1 + rng.below(100)});
    }
    const auto base = aggregate(locals);
    for (int trial = 0; trial < 20; ++trial) {
        for (std::size_t i = locals.size(); i > 1; --i) {
            std::swap(locals[i - 1], locals[rng.below(i)]);
        }
        EXPECT_EQ(aggregate(locals).weights, base.weights);
    }
}

TEST(Aggregate, AffineEquivariance) {
    Rng rng(6);
    std::vector<LocalModel> locals;
    for (int id = 1; id <= 6; ++id) {
        Eigen::VectorXd w(3);
        for (Eigen::Index i = 0; i < 3; ++i) {
            w[i] = rng.normal();
        }
        locals.push_back({id, w, 1 + rng.below(50)});
    }
    const double c = -2.5;
    const Eigen::VectorXd b = model_of({1.0, -4.0, 0.25}).weights;
    auto shifted = locals;
    for (auto& l : shifted) {
        l.weights = c * l.weights + b;
    }
    const Eigen::VectorXd want = c * aggregate(locals).weights + b;
    const Eigen::VectorXd got = aggregate(shifted).weights;
    EXPECT_LT((got - want).lpNorm<Eigen::Infinity>(), 1e-13);
}

TEST(Aggregate, ErrorPaths) {
    EXPECT_THROW((void)aggregate({}), std::invalid_argument);
    EXPECT_THROW((void)aggregate({{1, model_of({1.0}).weights, 2}, {2, model_of({1.0, 2.0}).weights, 2}}),
                 std::invalid_argument);
    EXPECT_THROW((void)aggregate({{1, model_of({1.0}).weights, 0}}), std::invalid_argument);
}

TEST(GlobalLoss, UnweightedMeanOfClients) {
    const std::vector<ClientDataset> clients{line_data(1, {1.0}, 2.0), line_data(2, {1.0, 1.0, 1.0}, 4.0)};
    const auto g = model_of({2.0});
    EXPECT_DOUBLE_EQ(global_loss(g, clients), (0.0 + 2.0) / 2.0);
    EXPECT_EQ(global_loss(model_of({2.0}), std::vector<ClientDataset>{line_data(1, {1.0, 3.0}, 2.0)}), 0.0);
}

TEST(GlobalLoss, NeverNegative) {
    Rng rng(7);
    const auto task = make_synthetic(5, 3, 5, 10, 0.5, rng);
    for (int i = 0; i < 100; ++i) {
        GlobalModel g;
        g.weights = Eigen::VectorXd::Random(3) * 10.0;
        EXPECT_GE(global_loss(g, task.clients), 0.0);
    }
}

TEST(Synthetic, NoiseFreeTruthFitsExactly) {
    Rng rng(8);
    const auto task = make_synthetic(20, 5, 20, 60, 0.0, rng);
    ASSERT_EQ(task.clients.size(), 20u);
    for (const auto& c : task.clients) {
        EXPECT_GE(c.size(), 20u);
        EXPECT_LE(c.size(), 60u);
    }
    GlobalModel truth;
    truth.weights = task.true_weights;
    EXPECT_LT(global_loss(truth, task.clients), 1e-28);
}

TEST(RunFedAvg, SingleClientEqualsGradientDescent) {
    Rng rng(9);
    const auto task = make_synthetic(1, 4, 30, 30, 0.1, rng);
    const double alpha = 0.05;
    const int epochs = 5;
    const int rounds = 40;
    GlobalModel init;
    init.weights = Eigen::VectorXd::Zero(4);
    const auto fed = run_fedavg(task.clients, init, alpha, epochs, rounds);

    Eigen::VectorXd w = Eigen::VectorXd::Zero(4);
    for (int step = 0; step < epochs * rounds; ++step) {
        w -= alpha * client_gradient(w, task.clients[0]);
    }
    EXPECT_EQ(fed.model.weights, w);
    EXPECT_EQ(fed.model.round, rounds);
    EXPECT_EQ(fed.losses.size(), static_cast<std::size_t>(rounds + 1));
}

TEST(RunFedAvg, LossNonIncreasingForSmallStep) {
    Rng rng(10);
    const auto task = make_synthetic(20, 5, 20, 60, 0.3, rng);
    const double alpha = 1e-3 / smoothness_bound(task.clients);
    GlobalModel init;
    init.weights = Eigen::VectorXd::Zero(5);
    const auto h = run_fedavg(task.clients, init, alpha, 5, 50);
    for (std::size_t i = 1; i < h.losses.size(); ++i) {
        EXPECT_LE(h.losses[i], h.losses[i - 1]);
    }
}

}  // namespace
}  // namespace feel::fedavg
