#pragma once

/// @file trace.hpp
/// @brief Per-round CSV traces and per-episode summaries.

#include "feel/environment.hpp"

#include <ostream>
#include <span>

namespace feel {

struct EpisodeSummary {
    double total_reward = 0.0;
    int rounds_completed = 0;
    double mean_cost = 0.0;     ///< mean instant cost over completed rounds
    double mean_latency = 0.0;  ///< mean system latency over completed rounds
    double mean_energy = 0.0;   ///< mean system energy over completed rounds
    Termination reason = Termination::none;
};

/// Accumulates step results into an EpisodeSummary.
class EpisodeStats {
public:
    void add(const StepResult& step);
    [[nodiscard]] EpisodeSummary summary() const;

private:
    EpisodeSummary sum_;
    double cost_ = 0.0;
    double latency_ = 0.0;
    double energy_ = 0.0;
};

/// Writes one CSV row per played round:
/// episode, round, eta_1..M, bw_1..M, t_local_1..M, t_up_1..M, e_local_1..M,
/// e_up_1..M, system_latency, system_energy, cost, reward, done, reason,
/// battery_1..M (after the round).
class TraceWriter {
public:
    TraceWriter(std::ostream& out, std::size_t num_devices);

    void write_header();
    void write_row(int episode, int round, const AllocationAction& action, const StepResult& step,
                   std::span<const DeviceState> after);

private:
    std::ostream& out_;
    std::size_t m_;
};

}  // namespace feel
