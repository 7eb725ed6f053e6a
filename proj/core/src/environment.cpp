#include "feel/environment.hpp"

#include <algorithm>
#include <stdexcept>

namespace feel {

void FleetBounds::validate() const {
    const auto ok = [](double lo, double hi) { return lo > 0.0 && lo <= hi; };
    if (!ok(battery_lo, battery_hi) || !ok(freq_lo, freq_hi) || !ok(cycles_lo, cycles_hi) ||
        !ok(dataset_lo, dataset_hi) || !ok(chip_lo, chip_hi) || !(tx_power > 0.0)) {
        throw std::invalid_argument("invalid fleet distribution bounds");
    }
}

std::vector<DeviceProfile> sample_fleet(std::size_t num_devices, const FleetBounds& bounds, Rng& rng) {
    bounds.validate();
    std::vector<DeviceProfile> fleet(num_devices);
    for (std::size_t i = 0; i < num_devices; ++i) {
        auto& p = fleet[i];
        p.id = static_cast<int>(i) + 1;
        p.battery_capacity = rng.uniform(bounds.battery_lo, bounds.battery_hi);
        p.base_freq_init = rng.uniform(bounds.freq_lo, bounds.freq_hi);
        p.cycles_per_sample = rng.uniform(bounds.cycles_lo, bounds.cycles_hi);
        p.dataset_size = rng.uniform(bounds.dataset_lo, bounds.dataset_hi);
        p.chip_coeff = rng.uniform(bounds.chip_lo, bounds.chip_hi);
        p.tx_power = bounds.tx_power;
    }
    return fleet;
}

std::vector<double> Observation::flatten() const {
    std::vector<double> v;
    v.reserve(size());
    v.push_back(round);
    v.insert(v.end(), batteries.begin(), batteries.end());
    v.insert(v.end(), base_freqs.begin(), base_freqs.end());
    v.insert(v.end(), channel_gains.begin(), channel_gains.end());
    return v;
}

std::string_view to_string(Termination t) noexcept {
    switch (t) {
        case Termination::none: return "none";
        case Termination::battery_exhausted: return "battery_exhausted";
        case Termination::max_rounds_reached: return "max_rounds_reached";
    }
    return "unknown";
}

Environment::Environment(SystemConfig config) : config_(config) { config_.validate(); }

Observation Environment::reset(const FleetSpec& fleet, std::uint64_t seed) {
    if (const auto* bounds = std::get_if<FleetBounds>(&fleet)) {
        Rng fleet_rng(derive_seed(seed, Stream::fleet));
        profiles_ = sample_fleet(config_.num_devices, *bounds, fleet_rng);
    } else {
        const auto& explicit_fleet = std::get<std::vector<DeviceProfile>>(fleet);
        if (explicit_fleet.size() != config_.num_devices) {
            throw std::invalid_argument("explicit fleet size does not match num_devices");
        }
        validate_fleet(explicit_fleet);
        profiles_ = explicit_fleet;
    }
    return reset(seed);
}

Observation Environment::reset(std::uint64_t seed) {
    if (profiles_.empty()) {
        throw std::logic_error("reset(seed) requires a fleet; call reset(fleet, seed) first");
    }
    dynamics_ = Rng(derive_seed(seed, Stream::dynamics));
    freq_norm_ = 0.0;
    states_.assign(profiles_.size(), DeviceState{});
    for (std::size_t i = 0; i < profiles_.size(); ++i) {
        states_[i].battery_remaining = profiles_[i].battery_capacity;
        states_[i].base_freq = profiles_[i].base_freq_init;
        states_[i].channel_gain_pow = std::max(dynamics_.exponential(1.0), config_.channel_gain_floor);
        freq_norm_ = std::max(freq_norm_, profiles_[i].base_freq_init);
    }
    round_ = 1;
    done_ = false;
    return observe();
}

void Environment::advance_dynamics() {
    for (std::size_t i = 0; i < profiles_.size(); ++i) {
        const double jitter = dynamics_.uniform(config_.freq_jitter_lo, config_.freq_jitter_hi);
        states_[i].base_freq = profiles_[i].base_freq_init * jitter;
    }
    for (auto& s : states_) {
        s.channel_gain_pow = std::max(dynamics_.exponential(1.0), config_.channel_gain_floor);
    }
}

StepResult Environment::step(const AllocationAction& action) {
    if (profiles_.empty()) {
        throw std::logic_error("step() before reset()");
    }
    if (done_) {
        throw std::logic_error("step() after the episode has terminated");
    }

    StepResult result;
    result.outcome = evaluate_round(profiles_, states_, action, config_);

    for (std::size_t i = 0; i < states_.size(); ++i) {
        if (states_[i].battery_remaining < result.outcome.e_total[i]) {
            done_ = true;
            result.done = true;
            result.reason = Termination::battery_exhausted;
            result.reward = 0.0;
            result.observation = observe();
            return result;
        }
    }

    for (std::size_t i = 0; i < states_.size(); ++i) {
        states_[i].battery_remaining = std::max(0.0, states_[i].battery_remaining - result.outcome.e_total[i]);
    }
    result.reward = static_cast<double>(round_) - config_.reward_cost_scale * result.outcome.instant_cost;
    ++round_;
    advance_dynamics();

    if (round_ > config_.max_rounds) {
        done_ = true;
        result.done = true;
        result.reason = Termination::max_rounds_reached;
    }
    result.observation = observe();
    return result;
}

Observation Environment::observe() const {
    Observation obs;
    const auto m = profiles_.size();
    obs.round = static_cast<double>(round_) / static_cast<double>(config_.max_rounds);
    obs.batteries.resize(m);
    obs.base_freqs.resize(m);
    obs.channel_gains.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        obs.batteries[i] = states_[i].battery_remaining / profiles_[i].battery_capacity;
        obs.base_freqs[i] = states_[i].base_freq / freq_norm_;
        obs.channel_gains[i] = std::min(states_[i].channel_gain_pow, config_.channel_clip) / config_.channel_clip;
    }
    return obs;
}

}  // namespace feel
