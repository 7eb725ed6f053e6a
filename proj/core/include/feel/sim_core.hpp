#pragma once

/// @file sim_core.hpp
/// @brief Per-round latency / energy / cost model of a federated edge learning round.
///
/// Everything in this header is a pure function of its arguments. Units are SI
/// throughout: Hz, seconds, joules, watts, bits.

#include <cstddef>
#include <span>
#include <vector>

namespace feel {

/// Immutable physical constants of one edge device.
struct DeviceProfile {
    int id = 0;
    double cycles_per_sample = 0.0;  ///< CPU cycles to process one sample
    double dataset_size = 0.0;       ///< local samples
    double chip_coeff = 0.0;         ///< J*s^2/cycle^3
    double tx_power = 0.0;           ///< W
    double battery_capacity = 0.0;   ///< J
    double base_freq_init = 0.0;     ///< Hz, base frequency in the first round
};

/// Mutable per-round state of one device.
struct DeviceState {
    double battery_remaining = 0.0;  ///< J
    double base_freq = 0.0;          ///< Hz
    double channel_gain_pow = 0.0;   ///< |h|^2
};

/// Joint per-round decision: CPU frequency scaling and uplink bandwidth per device.
struct AllocationAction {
    std::vector<double> freq_scale;  ///< eta_m, dimensionless
    std::vector<double> bandwidth;   ///< B_m, Hz
};

struct SystemConfig {
    std::size_t num_devices = 20;
    int max_rounds = 1000;
    int local_epochs = 5;
    double total_bandwidth = 5e6;   ///< Hz
    double model_size = 8e7;        ///< bits (10 MB)
    double noise_power = 1e-9;      ///< W
    double lambda_tradeoff = 0.5;
    double eta_min = 0.05;
    double bandwidth_floor_frac = 1e-3;  ///< per-device floor as a fraction of total_bandwidth
    double freq_jitter_lo = 0.8;
    double freq_jitter_hi = 1.2;
    double channel_gain_floor = 1e-3;
    double channel_clip = 5.0;           ///< observation clip for channel gains
    double reward_cost_scale = 1.0;      ///< kappa in reward = k - kappa * cost
    /// Multiply local training energy by the number of local epochs, so that the
    /// energy and the latency account for the same amount of work.
    bool energy_counts_epochs = true;

    [[nodiscard]] double bandwidth_floor() const noexcept {
        return bandwidth_floor_frac * total_bandwidth;
    }

    /// Throws std::invalid_argument on any out-of-range field.
    void validate() const;
};

struct RoundOutcome {
    std::vector<double> t_local;
    std::vector<double> t_up;
    std::vector<double> t_total;
    std::vector<double> e_local;
    std::vector<double> e_up;
    std::vector<double> e_total;
    double system_latency = 0.0;  ///< max over devices of t_total
    double system_energy = 0.0;   ///< sum over devices of e_total
    double instant_cost = 0.0;    ///< lambda * latency + (1 - lambda) * energy
    std::size_t bottleneck = 0;   ///< device defining system_latency, lowest index on ties
};

void validate_profile(const DeviceProfile& profile);

/// Checks each profile and that ids are unique.
void validate_fleet(std::span<const DeviceProfile> fleet);

/// Throws std::invalid_argument if the action breaks the frequency-range,
/// bandwidth-floor or bandwidth-budget constraints of @p config.
void validate_action(const AllocationAction& action, const SystemConfig& config);

/// Seconds spent on @p epochs passes over the local dataset at eta * base_freq.
double local_latency(const DeviceProfile& profile, const DeviceState& state, double eta, int epochs);

/// Shannon rate in bits/s. A zero channel gain or zero power gives rate 0.
double tx_rate(double bandwidth, double tx_power, double channel_gain_pow, double noise_power);

double tx_latency(double model_size_bits, double rate);

/// Training energy zeta * c * D * (eta * f)^2, times @p epochs when
/// @p include_epoch_factor is set.
double local_energy(const DeviceProfile& profile, const DeviceState& state, double eta, int epochs,
                    bool include_epoch_factor);

double tx_energy(double tx_power, double tx_latency);

/// Evaluates one round for the whole fleet. Does not touch @p states.
RoundOutcome evaluate_round(std::span<const DeviceProfile> profiles, std::span<const DeviceState> states,
                            const AllocationAction& action, const SystemConfig& config);

}  // namespace feel
