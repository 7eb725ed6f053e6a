#include "feel/sim_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace feel {

namespace {

void require(bool cond, const char* what) {
    if (!cond) {
        throw std::invalid_argument(what);
    }
}

void require_domain(bool cond, const char* what) {
    if (!cond) {
        throw std::domain_error(what);
    }
}

// Summing in sorted order makes the total independent of device order.
double order_free_sum(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return std::accumulate(values.begin(), values.end(), 0.0);
}

}  // namespace

void SystemConfig::validate() const {
    require(num_devices >= 1, "num_devices must be >= 1");
    require(max_rounds >= 1, "max_rounds must be >= 1");
    require(local_epochs >= 1, "local_epochs must be >= 1");
    require(total_bandwidth > 0.0, "total_bandwidth must be > 0");
    require(model_size > 0.0, "model_size must be > 0");
    require(noise_power > 0.0, "noise_power must be > 0");
    require(lambda_tradeoff >= 0.0 && lambda_tradeoff <= 1.0, "lambda_tradeoff must lie in [0, 1]");
    require(eta_min > 0.0 && eta_min <= 1.0, "eta_min must lie in (0, 1]");
    require(bandwidth_floor_frac > 0.0 && bandwidth_floor_frac * static_cast<double>(num_devices) < 1.0,
            "bandwidth_floor_frac must be positive and leave room for every device");
    require(freq_jitter_lo > 0.0 && freq_jitter_lo <= freq_jitter_hi, "invalid frequency jitter range");
    require(channel_gain_floor > 0.0, "channel_gain_floor must be > 0");
    require(channel_clip > 0.0, "channel_clip must be > 0");
    require(reward_cost_scale >= 0.0, "reward_cost_scale must be >= 0");
}

void validate_profile(const DeviceProfile& p) {
    require(p.cycles_per_sample > 0.0 && p.dataset_size > 0.0 && p.chip_coeff > 0.0 && p.tx_power > 0.0 &&
                p.battery_capacity > 0.0 && p.base_freq_init > 0.0,
            "device profile fields must be strictly positive");
}

void validate_fleet(std::span<const DeviceProfile> fleet) {
    std::unordered_set<int> ids;
    for (const auto& p : fleet) {
        validate_profile(p);
        require(ids.insert(p.id).second, "device ids must be unique within a fleet");
    }
}

void validate_action(const AllocationAction& action, const SystemConfig& config) {
    const auto m = config.num_devices;
    require(action.freq_scale.size() == m && action.bandwidth.size() == m, "action dimension mismatch");
    for (double eta : action.freq_scale) {
        require(eta >= config.eta_min && eta <= 1.0, "frequency scale outside [eta_min, 1]");
    }
    const double floor = config.bandwidth_floor();
    for (double b : action.bandwidth) {
        require(b >= floor * (1.0 - 1e-12), "bandwidth below per-device floor");
    }
    const double total = std::accumulate(action.bandwidth.begin(), action.bandwidth.end(), 0.0);
    require(std::abs(total - config.total_bandwidth) <= 1e-9 * config.total_bandwidth,
            "bandwidth does not sum to the total budget");
}

double local_latency(const DeviceProfile& profile, const DeviceState& state, double eta, int epochs) {
    require_domain(eta > 0.0, "local_latency: eta must be > 0");
    require_domain(state.base_freq > 0.0, "local_latency: base frequency must be > 0");
    return static_cast<double>(epochs) * profile.cycles_per_sample * profile.dataset_size / (eta * state.base_freq);
}

double tx_rate(double bandwidth, double tx_power, double channel_gain_pow, double noise_power) {
    require_domain(bandwidth > 0.0, "tx_rate: bandwidth must be > 0");
    require_domain(noise_power > 0.0, "tx_rate: noise power must be > 0");
    require_domain(tx_power >= 0.0 && channel_gain_pow >= 0.0, "tx_rate: negative power or gain");
    return bandwidth * std::log2(1.0 + tx_power * channel_gain_pow / noise_power);
}

double tx_latency(double model_size_bits, double rate) {
    require_domain(rate > 0.0, "tx_latency: rate must be > 0");
    require_domain(model_size_bits >= 0.0, "tx_latency: negative model size");
    return model_size_bits / rate;
}

double local_energy(const DeviceProfile& profile, const DeviceState& state, double eta, int epochs,
                    bool include_epoch_factor) {
    require_domain(eta > 0.0 && state.base_freq > 0.0 && epochs >= 1, "local_energy: non-positive input");
    const double op_freq = eta * state.base_freq;
    const double per_pass = profile.chip_coeff * profile.cycles_per_sample * profile.dataset_size * op_freq * op_freq;
    return include_epoch_factor ? static_cast<double>(epochs) * per_pass : per_pass;
}

double tx_energy(double tx_power, double tx_latency) {
    require_domain(tx_power >= 0.0 && tx_latency >= 0.0, "tx_energy: negative input");
    return tx_power * tx_latency;
}

RoundOutcome evaluate_round(std::span<const DeviceProfile> profiles, std::span<const DeviceState> states,
                            const AllocationAction& action, const SystemConfig& config) {
    const auto m = profiles.size();
    if (states.size() != m || config.num_devices != m) {
        throw std::invalid_argument("evaluate_round: fleet dimension mismatch");
    }
    validate_action(action, config);

    RoundOutcome out;
    out.t_local.resize(m);
    out.t_up.resize(m);
    out.t_total.resize(m);
    out.e_local.resize(m);
    out.e_up.resize(m);
    out.e_total.resize(m);

    for (std::size_t i = 0; i < m; ++i) {
        const auto& p = profiles[i];
        const auto& s = states[i];
        const double eta = action.freq_scale[i];
        const double rate = tx_rate(action.bandwidth[i], p.tx_power, s.channel_gain_pow, config.noise_power);
        out.t_local[i] = local_latency(p, s, eta, config.local_epochs);
        out.t_up[i] = tx_latency(config.model_size, rate);
        out.t_total[i] = out.t_local[i] + out.t_up[i];
        out.e_local[i] = local_energy(p, s, eta, config.local_epochs, config.energy_counts_epochs);
        out.e_up[i] = tx_energy(p.tx_power, out.t_up[i]);
        out.e_total[i] = out.e_local[i] + out.e_up[i];
    }

    const auto worst = std::max_element(out.t_total.begin(), out.t_total.end());
    out.bottleneck = static_cast<std::size_t>(worst - out.t_total.begin());
    out.system_latency = *worst;
    out.system_energy = order_free_sum(out.e_total);
    out.instant_cost =
        config.lambda_tradeoff * out.system_latency + (1.0 - config.lambda_tradeoff) * out.system_energy;
    return out;
}

}  // namespace feel
