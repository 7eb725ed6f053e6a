#pragma once

/// @file harness.hpp
/// @brief Reproducible experiment runner behind the command-line tool.
///
/// One master seed drives every random stream. Each output CSV starts with a
/// `#` comment line carrying the tool version, the config hash and the seed;
/// wall-clock timestamps only appear in meta.json.

#include "feel/baselines.hpp"
#include "feel/ddpg.hpp"
#include "feel/environment.hpp"
#include "feel/fedavg.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace feel::harness {

std::string_view tool_version() noexcept;

enum class SweepAxis { none, static_factor, num_users, total_bandwidth };

std::string_view to_string(SweepAxis axis) noexcept;
SweepAxis parse_axis(std::string_view name);

struct FedAvgSettings {
    std::size_t clients = 20;
    std::size_t dim = 5;
    std::size_t min_samples = 20;
    std::size_t max_samples = 60;
    double label_noise = 0.0;
    double learning_rate = 0.05;
    int rounds = 100;
};

struct ExperimentConfig {
    std::string preset = "reference";
    SystemConfig system;
    FleetBounds fleet;
    AgentConfig agent;
    SweepAxis axis = SweepAxis::none;
    std::vector<double> sweep_values;
    /// Candidate factors for the best static policy on non-factor sweeps.
    std::vector<double> static_factors{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    /// Sweeps also train and evaluate DDPG and E-DDPG at every point.
    bool sweep_agents = false;
    int episodes = 800;
    int repeats = 5;
    std::uint64_t seed = 0;
    /// Training episodes (zero-based) that get a per-round trace file.
    std::vector<int> trace_episodes;
    std::string checkpoint;  ///< evaluate: checkpoint directory
    /// Sweep: load agents from <dir>/<strategy>_<point> instead of training.
    std::string agent_checkpoints;
    FedAvgSettings fedavg;
    std::string output_dir = "runs/out";
    int parallel = 1;

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

/// Reference setup: 20 devices, 1000 rounds, 800 episodes.
ExperimentConfig reference_preset();

/// Five devices, 200 rounds and 300 episodes on batteries scaled to 20 percent.
ExperimentConfig desk_preset();

ExperimentConfig preset(std::string_view name);

/// Sweep points used when a sweep is requested without explicit values.
/// Bandwidth points scale with num_devices / 20 so that the per-device share
/// matches the 20-device sweep.
std::vector<double> default_sweep_values(const ExperimentConfig& config, SweepAxis axis);

std::string to_json(const ExperimentConfig& config);

/// Parses a JSON document over @p base. Missing keys keep the base value;
/// unknown keys are rejected.
ExperimentConfig from_json(std::string_view text, const ExperimentConfig& base);

ExperimentConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base);

/// 16 hex digits of FNV-1a over the canonical JSON of the config, excluding
/// the output directory and the worker count.
std::string config_hash(const ExperimentConfig& config);

/// `# tool=... version=... config_hash=... seed=...`
std::string provenance_line(const ExperimentConfig& config);

struct Stat {
    double mean = 0.0;
    double std = 0.0;  ///< sample standard deviation, 0 for a single value
};

Stat describe(std::span<const double> values);

struct EpisodeRow {
    int episode = 0;
    EpisodeSummary summary;
    double critic_loss = 0.0;
    double actor_objective = 0.0;
    double noise_sigma = 0.0;
};

/// One evaluation episode of one strategy at one sweep point.
struct RunRow {
    double axis_value = 0.0;
    std::string strategy;
    double factor = 0.0;  ///< static factor, 0 for learned strategies
    int repeat = 0;
    EpisodeSummary summary;
};

struct PointAggregate {
    double axis_value = 0.0;
    std::string strategy;
    double factor = 0.0;
    int repeats = 0;
    Stat rounds;
    double rounds_max = 0.0;
    Stat energy;
    Stat latency;
    Stat cost;
};

struct RunRecord {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<EpisodeRow> episodes;
    std::vector<RunRow> runs;
    std::vector<PointAggregate> aggregates;
    std::vector<double> fedavg_losses;
};

/// Groups rows by (axis value, strategy, factor) in first-seen order.
std::vector<PointAggregate> aggregate_runs(std::span<const RunRow> runs);

/// Seed of the dynamics stream for training episode @p episode.
std::uint64_t training_episode_seed(std::uint64_t master, int episode);

/// Seed of the dynamics stream for evaluation repeat @p repeat; disjoint from
/// the training seeds.
std::uint64_t evaluation_seed(std::uint64_t master, int repeat);

struct TrainResult {
    DdpgAgent agent;
    std::vector<EpisodeRow> episodes;
};

/// Trains one agent on the fleet drawn from config.seed. Traces for
/// config.trace_episodes go to @p trace_dir when it is set.
TrainResult train_agent(const ExperimentConfig& config, bool even_bandwidth,
                        const std::optional<std::filesystem::path>& trace_dir = std::nullopt);

/// Noise-free rollouts of @p policy over config.repeats evaluation seeds.
std::vector<EpisodeSummary> evaluate_policy(const Policy& policy, const ExperimentConfig& config);

/// Static factors, scored on the evaluation seeds. The best factor is the
/// cheapest one that completes every repeat, or the longest-lived when none
/// does.
struct StaticBest {
    double factor = 0.0;
    std::vector<EpisodeSummary> runs;
};
StaticBest best_static(const ExperimentConfig& config);

/// Writes training_log.csv, checkpoint/, traces and meta.json under output_dir.
RunRecord cmd_train(const ExperimentConfig& config);

/// Writes sweep_<axis>.csv (aggregates), sweep_<axis>_runs.csv and meta.json.
RunRecord cmd_sweep(const ExperimentConfig& config);

/// Loads config.checkpoint read-only; writes evaluation.csv,
/// evaluation_summary.csv, trace_<repeat>.csv and meta.json.
RunRecord cmd_evaluate(const ExperimentConfig& config);

/// Writes fedavg_loss.csv and meta.json.
RunRecord cmd_fedavg_demo(const ExperimentConfig& config);

}  // namespace feel::harness
