#include "feel/baselines.hpp"

#include "feel/ddpg.hpp"

#include <sstream>
#include <stdexcept>

namespace feel {

namespace {

std::vector<double> even_split(const SystemConfig& config) {
    return std::vector<double>(config.num_devices,
                               config.total_bandwidth / static_cast<double>(config.num_devices));
}

}  // namespace

StaticPolicy::StaticPolicy(double factor, const SystemConfig& config) : factor_(factor), config_(config) {
    if (!(factor >= config.eta_min && factor <= 1.0)) {
        throw std::domain_error("static factor must lie in [eta_min, 1]");
    }
}

std::string StaticPolicy::name() const {
    std::ostringstream os;
    os << "static(" << factor_ << ")";
    return os.str();
}

AllocationAction StaticPolicy::act(const Observation&) const {
    return {std::vector<double>(config_.num_devices, factor_), even_split(config_)};
}

EvenBandwidthPolicy::EvenBandwidthPolicy(std::shared_ptr<const Policy> inner, const SystemConfig& config)
    : inner_(std::move(inner)), config_(config) {
    if (!inner_) {
        throw std::invalid_argument("EvenBandwidthPolicy needs an inner policy");
    }
}

std::string EvenBandwidthPolicy::name() const { return "even-bw(" + inner_->name() + ")"; }

AllocationAction EvenBandwidthPolicy::act(const Observation& obs) const {
    auto a = inner_->act(obs);
    a.bandwidth = even_split(config_);
    return a;
}

ActorPolicy::ActorPolicy(neuro::MlpNet actor, const SystemConfig& config, std::string name)
    : actor_(std::move(actor)), config_(config), name_(std::move(name)) {
    if (actor_.input_dim() != 1 + 3 * config_.num_devices || actor_.output_dim() != 2 * config_.num_devices) {
        throw std::invalid_argument("actor network does not match the fleet size");
    }
}

AllocationAction ActorPolicy::act(const Observation& obs) const {
    const auto flat = obs.flatten();
    const Eigen::VectorXd out =
        actor_.forward(Eigen::Map<const Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size())));
    return decode_action(std::span<const double>(out.data(), static_cast<std::size_t>(out.size())), config_);
}

std::shared_ptr<const Policy> static_policy(double factor, const SystemConfig& config) {
    return std::make_shared<StaticPolicy>(factor, config);
}

std::shared_ptr<const Policy> even_bandwidth_wrapper(std::shared_ptr<const Policy> inner, const SystemConfig& config) {
    return std::make_shared<EvenBandwidthPolicy>(std::move(inner), config);
}

EpisodeSummary rollout(const Policy& policy, Environment& env, TraceWriter* trace, int episode) {
    EpisodeStats stats;
    while (!env.done()) {
        const int played = env.round();
        const auto action = policy.act(env.observe());
        const auto step = env.step(action);
        stats.add(step);
        if (trace != nullptr) {
            trace->write_row(episode, played, action, step, env.states());
        }
    }
    return stats.summary();
}

}  // namespace feel
