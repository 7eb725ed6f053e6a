#include "feel/fedavg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>

namespace feel::fedavg {

double client_loss(const Eigen::VectorXd& weights, const ClientDataset& data) {
    if (weights.size() != data.features.cols()) {
        throw std::invalid_argument("client_loss: dimension mismatch");
    }
    const Eigen::VectorXd r = data.features * weights - data.labels;
    return r.squaredNorm() / (2.0 * static_cast<double>(data.size()));
}

Eigen::VectorXd client_gradient(const Eigen::VectorXd& weights, const ClientDataset& data) {
    const Eigen::VectorXd r = data.features * weights - data.labels;
    return data.features.transpose() * r / static_cast<double>(data.size());
}

Eigen::VectorXd local_update(const GlobalModel& model, const ClientDataset& data, double alpha, int epochs) {
    if (alpha < 0.0) {
        throw std::invalid_argument("local_update: learning rate must be non-negative");
    }
    if (data.size() == 0 || model.weights.size() != data.features.cols()) {
        throw std::invalid_argument("local_update: empty dataset or dimension mismatch");
    }
    Eigen::VectorXd w = model.weights;
    for (int e = 0; e < epochs; ++e) {
        w -= alpha * client_gradient(w, data);
        if (!(w.norm() <= kDivergenceNorm)) {
            throw DivergenceError("local update diverged (||w|| > 1e6); lower the learning rate");
        }
    }
    return w;
}

GlobalModel aggregate(std::vector<LocalModel> locals, int round) {
    if (locals.empty()) {
        throw std::invalid_argument("aggregate: no local models");
    }
    std::stable_sort(locals.begin(), locals.end(),
                     [](const LocalModel& a, const LocalModel& b) { return a.client_id < b.client_id; });
    const auto dim = locals.front().weights.size();
    std::size_t total = 0;
    for (const auto& l : locals) {
        if (l.weights.size() != dim) {
            throw std::invalid_argument("aggregate: inconsistent weight dimensions");
        }
        total += l.samples;
    }
    if (total == 0) {
        throw std::invalid_argument("aggregate: zero total samples");
    }
    GlobalModel g;
    g.round = round;
    g.weights = Eigen::VectorXd::Zero(dim);
    for (const auto& l : locals) {
        g.weights += (static_cast<double>(l.samples) / static_cast<double>(total)) * l.weights;
    }
    return g;
}

double global_loss(const GlobalModel& model, std::span<const ClientDataset> clients) {
    if (clients.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const auto& c : clients) {
        sum += client_loss(model.weights, c);
    }
    return sum / static_cast<double>(clients.size());
}

double smoothness_bound(std::span<const ClientDataset> clients) {
    double bound = 0.0;
    for (const auto& c : clients) {
        const Eigen::MatrixXd h = c.features.transpose() * c.features / static_cast<double>(c.size());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
        bound = std::max(bound, es.eigenvalues().maxCoeff());
    }
    return bound;
}

Eigen::VectorXd centralized_optimum(std::span<const ClientDataset> clients) {
    if (clients.empty()) {
        throw std::invalid_argument("centralized_optimum: no clients");
    }
    const auto d = clients.front().features.cols();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
    for (const auto& c : clients) {
        const double w = 1.0 / static_cast<double>(c.size());
        h += w * c.features.transpose() * c.features;
        g += w * c.features.transpose() * c.labels;
    }
    return h.ldlt().solve(g);
}

SyntheticTask make_synthetic(std::size_t num_clients, std::size_t dim, std::size_t min_samples,
                             std::size_t max_samples, double label_noise, Rng& rng) {
    if (num_clients == 0 || dim == 0 || min_samples == 0 || min_samples > max_samples) {
        throw std::invalid_argument("make_synthetic: invalid sizes");
    }
    SyntheticTask task;
    const auto d = static_cast<Eigen::Index>(dim);
    task.true_weights.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        task.true_weights[i] = rng.uniform(-2.0, 2.0);
    }
    for (std::size_t c = 0; c < num_clients; ++c) {
        const auto n = static_cast<Eigen::Index>(min_samples + rng.below(max_samples - min_samples + 1));
        ClientDataset data;
        data.client_id = static_cast<int>(c) + 1;
        data.features.resize(n, d);
        for (Eigen::Index r = 0; r < n; ++r) {
            for (Eigen::Index k = 0; k < d; ++k) {
                data.features(r, k) = rng.normal();
            }
        }
        data.labels = data.features * task.true_weights;
        for (Eigen::Index r = 0; r < n; ++r) {
            data.labels[r] += label_noise * rng.normal();
        }
        task.clients.push_back(std::move(data));
    }
    return task;
}

FedAvgHistory run_fedavg(std::span<const ClientDataset> clients, GlobalModel init, double alpha, int epochs,
                         int rounds) {
    FedAvgHistory h;
    h.model = std::move(init);
    h.losses.push_back(global_loss(h.model, clients));
    for (int k = 1; k <= rounds; ++k) {
        std::vector<LocalModel> locals;
        locals.reserve(clients.size());
        for (const auto& c : clients) {
            locals.push_back({c.client_id, local_update(h.model, c, alpha, epochs), c.size()});
        }
        h.model = aggregate(std::move(locals), k);
        h.losses.push_back(global_loss(h.model, clients));
    }
    return h;
}

}  // namespace feel::fedavg
