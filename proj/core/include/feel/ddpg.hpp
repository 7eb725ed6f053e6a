#pragma once

/// @file ddpg.hpp
/// @brief Actor-critic agent (main + target actor and critic) with experience
/// replay, producing joint frequency-scaling / bandwidth allocations.
///
/// The actor has two heads over M devices: a sigmoid head giving frequency
/// scales and a softmax head giving bandwidth fractions. The concatenation of
/// the two head outputs is the "raw" action that is stored in replay and fed
/// to the critic after the observation.

#include "feel/environment.hpp"
#include "feel/neuro.hpp"
#include "feel/rng.hpp"
#include "feel/trace.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace feel {

struct Transition {
    std::vector<double> state;
    std::vector<double> action;  ///< raw head outputs, eta part then bandwidth fractions
    double reward = 0.0;         ///< as fed to the learner (already scaled)
    std::vector<double> next_state;
    bool done = false;
};

/// Fixed-capacity ring of transitions; the oldest entry is overwritten first.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);

    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }

    /// Logical index 0 is the oldest stored transition.
    [[nodiscard]] const Transition& at(std::size_t i) const;

    /// @p n indices drawn uniformly with replacement from [0, size()).
    [[nodiscard]] std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;

private:
    std::size_t capacity_;
    std::size_t head_ = 0;  // next slot to overwrite once full
    std::vector<Transition> data_;
};

struct AgentConfig {
    std::vector<std::size_t> actor_hidden{64, 256};
    std::vector<std::size_t> critic_hidden{30, 30};
    double actor_lr = 1e-6;
    double critic_lr = 1e-2;
    double gamma = 0.999;
    double tau = 1e-3;
    std::size_t batch_size = 128;
    std::size_t buffer_capacity = 10000;
    int updates_per_episode = 50;
    /// Train once per environment step instead of in a block at episode end.
    bool train_every_step = false;
    double noise_start = 0.3;
    double noise_end = 0.01;
    double noise_decay_fraction = 0.6;  ///< share of episodes over which sigma decays
    int total_episodes = 800;
    /// Learner rewards are divided by this; 0 means max_rounds.
    double reward_scale = 0.0;
    /// Override the bandwidth head with an even split (E-DDPG).
    bool even_bandwidth = false;

    void validate() const;
};

struct TrainDiagnostics {
    double critic_loss = 0.0;       ///< mean squared TD error before the critic step
    double actor_objective = 0.0;   ///< mean Q(s, mu(s)) before the actor step
    double critic_grad_norm = 0.0;
    double actor_grad_norm = 0.0;
};

struct ActionChoice {
    std::vector<double> raw;
    AllocationAction action;
};

class InsufficientSamples : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Maps raw head outputs to a valid allocation:
/// eta_m = eta_min + s_m * (1 - eta_min); bandwidth = fraction * B_total, raised
/// to the per-device floor with the remainder rescaled to keep the total.
AllocationAction decode_action(std::span<const double> raw, const SystemConfig& config);

/// Exploration sigma for a zero-based episode index: linear from noise_start
/// to noise_end over the first noise_decay_fraction of total_episodes.
double noise_sigma(const AgentConfig& config, int episode);

class DdpgAgent {
public:
    DdpgAgent(const SystemConfig& system, AgentConfig config, std::uint64_t seed);

    /// Actor output plus, when @p explore is set, Gaussian noise of the current
    /// sigma on the head pre-activations.
    [[nodiscard]] ActionChoice select_action(const Observation& obs, bool explore, Rng& noise_rng) const;

    void store(Transition t) { buffer_.push(std::move(t)); }

    /// One critic step, one actor step and both soft updates.
    /// Throws InsufficientSamples when fewer than batch_size transitions are stored.
    TrainDiagnostics train_step(Rng& replay_rng);

    /// batch_size transitions drawn uniformly with replacement.
    [[nodiscard]] std::vector<const Transition*> sample_batch(Rng& replay_rng) const;

    /// One Adam step on the critic's mean squared TD error. Returns the loss
    /// before the step.
    double update_critic(std::span<const Transition* const> batch, double* grad_norm = nullptr);

    /// One Adam step of the actor along the critic's action gradient. Returns
    /// mean Q(s, mu(s)) before the step.
    double update_actor(std::span<const Transition* const> batch, double* grad_norm = nullptr);

    /// Blends both target networks toward the main networks by tau.
    void update_targets();

    /// Target-network TD targets for the given transitions (used by train_step).
    [[nodiscard]] Eigen::VectorXd td_targets(std::span<const Transition* const> batch) const;

    void set_episode(int episode) { sigma_ = noise_sigma(config_, episode); episode_ = episode; }
    void set_noise_sigma(double sigma) { sigma_ = sigma; }
    [[nodiscard]] double current_sigma() const noexcept { return sigma_; }
    [[nodiscard]] int episode() const noexcept { return episode_; }

    [[nodiscard]] double learner_reward(double env_reward) const noexcept { return env_reward / reward_scale_; }

    [[nodiscard]] const AgentConfig& config() const noexcept { return config_; }
    [[nodiscard]] const SystemConfig& system() const noexcept { return system_; }
    [[nodiscard]] const ReplayBuffer& buffer() const noexcept { return buffer_; }

    [[nodiscard]] neuro::MlpNet& actor() noexcept { return actor_; }
    [[nodiscard]] neuro::MlpNet& target_actor() noexcept { return target_actor_; }
    [[nodiscard]] neuro::MlpNet& critic() noexcept { return critic_; }
    [[nodiscard]] neuro::MlpNet& target_critic() noexcept { return target_critic_; }
    [[nodiscard]] const neuro::MlpNet& actor() const noexcept { return actor_; }
    [[nodiscard]] const neuro::MlpNet& target_actor() const noexcept { return target_actor_; }
    [[nodiscard]] const neuro::MlpNet& critic() const noexcept { return critic_; }
    [[nodiscard]] const neuro::MlpNet& target_critic() const noexcept { return target_critic_; }

    /// Writes the four networks and checkpoint.json into @p dir. The replay
    /// buffer is not saved.
    void save_checkpoint(const std::filesystem::path& dir, const std::string& config_hash) const;

    /// Loads networks written by save_checkpoint. Throws std::runtime_error if
    /// any architecture differs from this agent's.
    void load_checkpoint(const std::filesystem::path& dir);

private:
    // Replaces the bandwidth rows with 1/M when even_bandwidth is set.
    void override_bandwidth(Eigen::MatrixXd& actions) const;

    SystemConfig system_;
    AgentConfig config_;
    neuro::MlpNet actor_;
    neuro::MlpNet target_actor_;
    neuro::MlpNet critic_;
    neuro::MlpNet target_critic_;
    ReplayBuffer buffer_;
    double reward_scale_ = 1.0;
    double sigma_ = 0.0;
    int episode_ = 0;
};

struct EpisodeOptions {
    bool train = true;
    bool explore = true;
    int episode = 0;
};

struct AgentEpisodeSummary {
    EpisodeSummary episode;
    double mean_critic_loss = 0.0;
    double mean_actor_objective = 0.0;
    double noise_sigma = 0.0;
    int train_steps = 0;
};

/// Plays @p env (already reset) to termination, storing every transition.
/// With options.train, trains per the agent's schedule. @p trace may be null.
AgentEpisodeSummary run_episode(DdpgAgent& agent, Environment& env, const EpisodeOptions& options, Rng& noise_rng,
                                Rng& replay_rng, TraceWriter* trace = nullptr);

}  // namespace feel
