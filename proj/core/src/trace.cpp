#include "feel/trace.hpp"

#include "feel/csv.hpp"

namespace feel {

void EpisodeStats::add(const StepResult& step) {
    sum_.total_reward += step.reward;
    if (step.reason != Termination::battery_exhausted) {
        ++sum_.rounds_completed;
        cost_ += step.outcome.instant_cost;
        latency_ += step.outcome.system_latency;
        energy_ += step.outcome.system_energy;
    }
    if (step.done) {
        sum_.reason = step.reason;
    }
}

EpisodeSummary EpisodeStats::summary() const {
    EpisodeSummary s = sum_;
    if (s.rounds_completed > 0) {
        const double n = s.rounds_completed;
        s.mean_cost = cost_ / n;
        s.mean_latency = latency_ / n;
        s.mean_energy = energy_ / n;
    }
    return s;
}

TraceWriter::TraceWriter(std::ostream& out, std::size_t num_devices) : out_(out), m_(num_devices) {}

void TraceWriter::write_header() {
    CsvRow row(out_);
    row << "episode" << "round";
    for (const char* prefix : {"eta", "bw", "t_local", "t_up", "e_local", "e_up"}) {
        for (std::size_t i = 1; i <= m_; ++i) {
            row << std::string(prefix) + "_" + std::to_string(i);
        }
    }
    row << "system_latency" << "system_energy" << "cost" << "reward" << "done" << "reason";
    for (std::size_t i = 1; i <= m_; ++i) {
        row << "battery_" + std::to_string(i);
    }
}

void TraceWriter::write_row(int episode, int round, const AllocationAction& action, const StepResult& step,
                            std::span<const DeviceState> after) {
    CsvRow row(out_);
    row << episode << round;
    const auto& o = step.outcome;
    for (const auto* v : {&action.freq_scale, &action.bandwidth, &o.t_local, &o.t_up, &o.e_local, &o.e_up}) {
        for (double x : *v) {
            row << x;
        }
    }
    row << o.system_latency << o.system_energy << o.instant_cost << step.reward << (step.done ? 1 : 0)
        << std::string(to_string(step.reason));
    for (const auto& s : after) {
        row << s.battery_remaining;
    }
}

}  // namespace feel
