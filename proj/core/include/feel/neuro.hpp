#pragma once

/// @file neuro.hpp
/// @brief Small fully connected networks with exact reverse-mode gradients.
///
/// A network is ReLU hidden layers followed by one linear output layer whose
/// units are split into heads, each with its own activation. All weights and
/// biases live in one flat vector so optimizers and target-network blending
/// can treat them uniformly. Batches are matrices with one sample per column.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace feel::neuro {

enum class Activation { identity, sigmoid, softmax };

struct HeadSpec {
    std::size_t width = 1;
    Activation activation = Activation::identity;

    friend bool operator==(const HeadSpec&, const HeadSpec&) = default;
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

struct AdamState {
    Eigen::VectorXd first_moment;
    Eigen::VectorXd second_moment;
    std::int64_t step = 0;
};

struct Gradients {
    Eigen::VectorXd params;  ///< summed over the batch
    Eigen::MatrixXd input;   ///< one column per sample
};

class MlpNet {
public:
    MlpNet(std::size_t input_dim, std::vector<std::size_t> hidden, std::vector<HeadSpec> heads);

    [[nodiscard]] std::size_t input_dim() const noexcept { return sizes_.front(); }
    [[nodiscard]] std::size_t output_dim() const noexcept { return sizes_.back(); }
    /// Input, hidden and output widths.
    [[nodiscard]] const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
    [[nodiscard]] const std::vector<HeadSpec>& heads() const noexcept { return heads_; }
    [[nodiscard]] std::size_t parameter_count() const noexcept { return static_cast<std::size_t>(params_.size()); }

    [[nodiscard]] Eigen::VectorXd& parameters() noexcept { return params_; }
    [[nodiscard]] const Eigen::VectorXd& parameters() const noexcept { return params_; }

    [[nodiscard]] AdamState& adam_state() noexcept { return adam_; }
    [[nodiscard]] const AdamState& adam_state() const noexcept { return adam_; }

    [[nodiscard]] Eigen::VectorXd forward(const Eigen::VectorXd& input) const;

    [[nodiscard]] Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;

    /// Forward pass with @p head_noise added to the output pre-activations
    /// before the head activations. Shape must be output_dim x batch.
    [[nodiscard]] Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& head_noise) const;

    /// Gradients of sum_j <output_grad_j, net(inputs_j)> with respect to the
    /// parameters and to each input column.
    [[nodiscard]] Gradients backward(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& output_grad) const;

    [[nodiscard]] bool same_architecture(const MlpNet& other) const noexcept {
        return sizes_ == other.sizes_ && heads_ == other.heads_;
    }

private:
    struct Cache {
        std::vector<Eigen::MatrixXd> pre;   // pre-activations per layer
        std::vector<Eigen::MatrixXd> post;  // post-activations, post[0] = inputs
    };

    void run(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd* head_noise, Cache& cache) const;
    void apply_heads(Eigen::MatrixXd& z) const;

    [[nodiscard]] std::size_t layers() const noexcept { return sizes_.size() - 1; }
    [[nodiscard]] Eigen::Map<const Eigen::MatrixXd> weight(std::size_t layer) const;
    [[nodiscard]] Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;

    std::vector<std::size_t> sizes_;
    std::vector<HeadSpec> heads_;
    std::vector<std::size_t> offsets_;  // start of W_l in params_; b_l follows W_l
    Eigen::VectorXd params_;
    AdamState adam_;
};

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero. Resets Adam state.
void init_params(MlpNet& net, std::uint64_t seed);

/// One bias-corrected Adam step against @p grads (descent direction).
void adam_step(MlpNet& net, const Eigen::VectorXd& grads, const AdamConfig& config);

/// target <- tau * main + (1 - tau) * target, elementwise.
void soft_update(MlpNet& target, const MlpNet& main, double tau);

/// Writes the parameters as little-endian float64 to @p blob and the
/// architecture to a JSON sidecar at blob + ".json".
void save_net(const MlpNet& net, const std::filesystem::path& blob);

/// Reads a network written by save_net. Throws std::runtime_error on a
/// malformed sidecar or a size mismatch.
MlpNet load_net(const std::filesystem::path& blob);

}  // namespace feel::neuro
