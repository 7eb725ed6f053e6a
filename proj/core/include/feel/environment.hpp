#pragma once

/// @file environment.hpp
/// @brief Episodic battery-constrained FEEL environment.

#include "feel/rng.hpp"
#include "feel/sim_core.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace feel {

/// Uniform sampling bounds for a random fleet. Defaults are the reference setup.
struct FleetBounds {
    double battery_lo = 2e4;
    double battery_hi = 3e4;
    double freq_lo = 1e7;
    double freq_hi = 5e7;
    double cycles_lo = 7e4;
    double cycles_hi = 2e5;
    double dataset_lo = 400.0;
    double dataset_hi = 600.0;
    double chip_lo = 1e-22;
    double chip_hi = 2e-22;
    double tx_power = 5e-5;

    /// Throws std::invalid_argument on non-positive or inverted bounds.
    void validate() const;
};

/// Either distribution bounds to sample from or an explicit fleet.
using FleetSpec = std::variant<FleetBounds, std::vector<DeviceProfile>>;

/// Draws @p num_devices profiles with ids 1..M.
std::vector<DeviceProfile> sample_fleet(std::size_t num_devices, const FleetBounds& bounds, Rng& rng);

struct Observation {
    double round = 0.0;                 ///< k / K
    std::vector<double> batteries;      ///< remaining / capacity
    std::vector<double> base_freqs;     ///< base_freq / max initial base frequency
    std::vector<double> channel_gains;  ///< min(|h|^2, clip) / clip

    [[nodiscard]] std::size_t size() const noexcept { return 1 + batteries.size() * 3; }

    /// [round, batteries..., base_freqs..., channel_gains...]
    [[nodiscard]] std::vector<double> flatten() const;
};

enum class Termination { none, battery_exhausted, max_rounds_reached };

std::string_view to_string(Termination t) noexcept;

struct StepResult {
    Observation observation;
    double reward = 0.0;
    bool done = false;
    Termination reason = Termination::none;
    RoundOutcome outcome;
};

/// One FEEL campaign at a time. Not thread-safe; use one instance per thread.
class Environment {
public:
    explicit Environment(SystemConfig config);

    /// Starts a new episode. Bounds are sampled from a fleet stream derived
    /// from @p seed; an explicit fleet is copied as-is.
    Observation reset(const FleetSpec& fleet, std::uint64_t seed);

    /// Starts a new episode on the current fleet.
    Observation reset(std::uint64_t seed);

    /// Plays one round. If any device cannot pay for the round the episode ends
    /// with battery_exhausted, no energy is drawn and the round is not counted.
    StepResult step(const AllocationAction& action);

    [[nodiscard]] Observation observe() const;

    [[nodiscard]] int rounds_completed() const noexcept { return round_ - 1; }
    [[nodiscard]] int round() const noexcept { return round_; }
    [[nodiscard]] bool done() const noexcept { return done_; }
    [[nodiscard]] bool initialized() const noexcept { return !profiles_.empty(); }

    [[nodiscard]] const SystemConfig& config() const noexcept { return config_; }
    [[nodiscard]] std::span<const DeviceProfile> profiles() const noexcept { return profiles_; }
    [[nodiscard]] std::span<const DeviceState> states() const noexcept { return states_; }

private:
    void advance_dynamics();

    SystemConfig config_;
    std::vector<DeviceProfile> profiles_;
    std::vector<DeviceState> states_;
    Rng dynamics_{0};
    double freq_norm_ = 1.0;
    int round_ = 1;
    bool done_ = false;
};

}  // namespace feel
