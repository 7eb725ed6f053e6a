#pragma once

/// @file baselines.hpp
/// @brief Comparison policies behind a common interface.

#include "feel/environment.hpp"
#include "feel/neuro.hpp"
#include "feel/trace.hpp"

#include <memory>
#include <string>

namespace feel {

/// Maps an observation to a valid allocation. Implementations are immutable
/// after construction and safe to share across threads.
class Policy {
public:
    virtual ~Policy() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    [[nodiscard]] virtual AllocationAction act(const Observation& obs) const = 0;
};

/// Same frequency factor for every device every round, even bandwidth split.
class StaticPolicy final : public Policy {
public:
    /// Throws std::domain_error unless eta_min <= factor <= 1.
    StaticPolicy(double factor, const SystemConfig& config);

    [[nodiscard]] std::string name() const override;
    [[nodiscard]] AllocationAction act(const Observation& obs) const override;
    [[nodiscard]] double factor() const noexcept { return factor_; }

private:
    double factor_;
    SystemConfig config_;
};

/// Delegates frequency scaling to @p inner and splits bandwidth evenly.
class EvenBandwidthPolicy final : public Policy {
public:
    EvenBandwidthPolicy(std::shared_ptr<const Policy> inner, const SystemConfig& config);

    [[nodiscard]] std::string name() const override;
    [[nodiscard]] AllocationAction act(const Observation& obs) const override;

private:
    std::shared_ptr<const Policy> inner_;
    SystemConfig config_;
};

/// Noise-free actor rollout from a frozen copy of an actor network.
class ActorPolicy final : public Policy {
public:
    ActorPolicy(neuro::MlpNet actor, const SystemConfig& config, std::string name = "ddpg");

    [[nodiscard]] std::string name() const override { return name_; }
    [[nodiscard]] AllocationAction act(const Observation& obs) const override;

private:
    neuro::MlpNet actor_;
    SystemConfig config_;
    std::string name_;
};

std::shared_ptr<const Policy> static_policy(double factor, const SystemConfig& config);

std::shared_ptr<const Policy> even_bandwidth_wrapper(std::shared_ptr<const Policy> inner, const SystemConfig& config);

/// Plays @p env (already reset) to termination under @p policy.
EpisodeSummary rollout(const Policy& policy, Environment& env, TraceWriter* trace = nullptr, int episode = 0);

}  // namespace feel
