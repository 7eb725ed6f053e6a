#pragma once

/// @file fedavg.hpp
/// @brief Federated averaging on a synthetic least-squares task.
///
/// Client loss is F_m(w) = ||X_m w - y_m||^2 / (2 n_m). Clients run full-batch
/// gradient steps locally; the server averages weights by sample share.

#include "feel/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace feel::fedavg {

struct ClientDataset {
    int client_id = 0;
    Eigen::MatrixXd features;  ///< n_m x d
    Eigen::VectorXd labels;    ///< n_m

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(labels.size()); }
};

struct GlobalModel {
    Eigen::VectorXd weights;
    int round = 0;
};

struct LocalModel {
    int client_id = 0;
    Eigen::VectorXd weights;
    std::size_t samples = 0;
};

class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kDivergenceNorm = 1e6;

double client_loss(const Eigen::VectorXd& weights, const ClientDataset& data);

Eigen::VectorXd client_gradient(const Eigen::VectorXd& weights, const ClientDataset& data);

/// @p epochs gradient steps w <- w - alpha * grad F_m(w) from the global weights.
/// Throws DivergenceError once ||w|| exceeds kDivergenceNorm.
Eigen::VectorXd local_update(const GlobalModel& model, const ClientDataset& data, double alpha, int epochs);

/// Sample-weighted mean, summed in ascending client id order so the result
/// does not depend on the order of @p locals.
GlobalModel aggregate(std::vector<LocalModel> locals, int round = 0);

/// Unweighted mean of client losses.
double global_loss(const GlobalModel& model, std::span<const ClientDataset> clients);

/// Largest per-client smoothness constant, lambda_max(X^T X / n_m).
double smoothness_bound(std::span<const ClientDataset> clients);

/// Minimizer of global_loss, from the normal equations of the unweighted
/// mean of client losses.
Eigen::VectorXd centralized_optimum(std::span<const ClientDataset> clients);

struct SyntheticTask {
    std::vector<ClientDataset> clients;
    Eigen::VectorXd true_weights;
};

/// Gaussian features, labels y = X w* + noise. Sample counts uniform in
/// [min_samples, max_samples].
SyntheticTask make_synthetic(std::size_t num_clients, std::size_t dim, std::size_t min_samples,
                             std::size_t max_samples, double label_noise, Rng& rng);

struct FedAvgHistory {
    std::vector<double> losses;  ///< global loss before round 1, then after each round
    GlobalModel model;
};

FedAvgHistory run_fedavg(std::span<const ClientDataset> clients, GlobalModel init, double alpha, int epochs,
                         int rounds);

}  // namespace feel::fedavg
