#include "feel/ddpg.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>

namespace feel {

namespace {

constexpr int kCheckpointVersion = 1;

Eigen::VectorXd to_eigen(std::span<const double> v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

neuro::MlpNet make_actor(const SystemConfig& sys, const AgentConfig& cfg) {
    const auto m = sys.num_devices;
    return neuro::MlpNet(1 + 3 * m, cfg.actor_hidden,
                         {{m, neuro::Activation::sigmoid}, {m, neuro::Activation::softmax}});
}

neuro::MlpNet make_critic(const SystemConfig& sys, const AgentConfig& cfg) {
    const auto m = sys.num_devices;
    return neuro::MlpNet(1 + 3 * m + 2 * m, cfg.critic_hidden, {{1, neuro::Activation::identity}});
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) {
        throw std::invalid_argument("replay capacity must be positive");
    }
    data_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
    if (data_.size() < capacity_) {
        data_.push_back(std::move(t));
        return;
    }
    data_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
    if (i >= data_.size()) {
        throw std::out_of_range("replay index out of range");
    }
    return data_[(head_ + i) % data_.size()];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
    if (data_.empty()) {
        throw InsufficientSamples("cannot sample from an empty replay buffer");
    }
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) {
        i = static_cast<std::size_t>(rng.below(data_.size()));
    }
    return idx;
}

void AgentConfig::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0) || !(tau >= 0.0 && tau <= 1.0) || batch_size == 0 ||
        buffer_capacity == 0 || updates_per_episode < 0 || !(actor_lr > 0.0) || !(critic_lr > 0.0) ||
        noise_start < 0.0 || noise_end < 0.0 || noise_decay_fraction < 0.0 || total_episodes < 1 ||
        reward_scale < 0.0) {
        throw std::invalid_argument("invalid agent configuration");
    }
}

double noise_sigma(const AgentConfig& config, int episode) {
    const double span = config.noise_decay_fraction * static_cast<double>(config.total_episodes);
    if (span <= 0.0 || static_cast<double>(episode) >= span) {
        return config.noise_end;
    }
    const double frac = static_cast<double>(std::max(episode, 0)) / span;
    return config.noise_start + (config.noise_end - config.noise_start) * frac;
}

AllocationAction decode_action(std::span<const double> raw, const SystemConfig& config) {
    const auto m = config.num_devices;
    if (raw.size() != 2 * m) {
        throw std::invalid_argument("decode_action: raw action has wrong length");
    }
    AllocationAction a;
    a.freq_scale.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double s = std::clamp(raw[i], 0.0, 1.0);
        a.freq_scale[i] = std::min(1.0, config.eta_min + s * (1.0 - config.eta_min));
    }

    // Raise starved devices to the floor and rescale the rest to the remaining
    // budget; repeat until no free device drops below the floor.
    const double total = config.total_bandwidth;
    const double floor = config.bandwidth_floor();
    std::vector<double> frac(raw.begin() + static_cast<std::ptrdiff_t>(m), raw.end());
    for (auto& f : frac) {
        f = std::max(f, 0.0);
    }
    std::vector<bool> pinned(m, false);
    a.bandwidth.assign(m, 0.0);
    for (std::size_t iter = 0; iter <= m; ++iter) {
        std::size_t n_pinned = 0;
        double free_mass = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (pinned[i]) {
                ++n_pinned;
            } else {
                free_mass += frac[i];
            }
        }
        const double budget = total - floor * static_cast<double>(n_pinned);
        const std::size_t n_free = m - n_pinned;
        bool changed = false;
        for (std::size_t i = 0; i < m; ++i) {
            if (pinned[i]) {
                a.bandwidth[i] = floor;
                continue;
            }
            a.bandwidth[i] = free_mass > 0.0 ? frac[i] / free_mass * budget : budget / static_cast<double>(n_free);
            if (a.bandwidth[i] < floor) {
                pinned[i] = true;
                changed = true;
            }
        }
        if (!changed) {
            break;
        }
    }
    return a;
}

DdpgAgent::DdpgAgent(const SystemConfig& system, AgentConfig config, std::uint64_t seed)
    : system_(system),
      config_(std::move(config)),
      actor_(make_actor(system_, config_)),
      target_actor_(actor_),
      critic_(make_critic(system_, config_)),
      target_critic_(critic_),
      buffer_(config_.buffer_capacity) {
    system_.validate();
    config_.validate();
    neuro::init_params(actor_, derive_seed(seed, Stream::init, 0));
    neuro::init_params(critic_, derive_seed(seed, Stream::init, 1));
    target_actor_ = actor_;
    target_critic_ = critic_;
    reward_scale_ = config_.reward_scale > 0.0 ? config_.reward_scale : static_cast<double>(system_.max_rounds);
    sigma_ = noise_sigma(config_, 0);
}

void DdpgAgent::override_bandwidth(Eigen::MatrixXd& actions) const {
    if (!config_.even_bandwidth) {
        return;
    }
    const auto m = static_cast<Eigen::Index>(system_.num_devices);
    actions.bottomRows(m).setConstant(1.0 / static_cast<double>(m));
}

ActionChoice DdpgAgent::select_action(const Observation& obs, bool explore, Rng& noise_rng) const {
    const auto flat = obs.flatten();
    const Eigen::MatrixXd x = to_eigen(flat);
    Eigen::MatrixXd out;
    if (explore && sigma_ > 0.0) {
        Eigen::MatrixXd noise(static_cast<Eigen::Index>(actor_.output_dim()), 1);
        for (Eigen::Index i = 0; i < noise.rows(); ++i) {
            noise(i, 0) = sigma_ * noise_rng.normal();
        }
        out = actor_.forward_batch(x, noise);
    } else {
        out = actor_.forward_batch(x);
    }
    override_bandwidth(out);
    ActionChoice choice;
    choice.raw.assign(out.data(), out.data() + out.size());
    choice.action = decode_action(choice.raw, system_);
    return choice;
}

Eigen::VectorXd DdpgAgent::td_targets(std::span<const Transition* const> batch) const {
    const auto n = static_cast<Eigen::Index>(batch.size());
    const auto obs_dim = static_cast<Eigen::Index>(actor_.input_dim());
    Eigen::MatrixXd next(obs_dim, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        next.col(j) = to_eigen(batch[static_cast<std::size_t>(j)]->next_state);
    }
    Eigen::MatrixXd next_actions = target_actor_.forward_batch(next);
    override_bandwidth(next_actions);
    Eigen::MatrixXd critic_in(obs_dim + next_actions.rows(), n);
    critic_in << next, next_actions;
    const Eigen::MatrixXd q_next = target_critic_.forward_batch(critic_in);

    Eigen::VectorXd y(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto* t = batch[static_cast<std::size_t>(j)];
        y[j] = t->done ? t->reward : t->reward + config_.gamma * q_next(0, j);
    }
    return y;
}

std::vector<const Transition*> DdpgAgent::sample_batch(Rng& replay_rng) const {
    if (buffer_.size() < config_.batch_size) {
        throw InsufficientSamples("replay buffer holds fewer transitions than one batch");
    }
    const auto idx = buffer_.sample_indices(config_.batch_size, replay_rng);
    std::vector<const Transition*> batch;
    batch.reserve(idx.size());
    for (auto i : idx) {
        batch.push_back(&buffer_.at(i));
    }
    return batch;
}

double DdpgAgent::update_critic(std::span<const Transition* const> batch, double* grad_norm) {
    const auto n = static_cast<Eigen::Index>(batch.size());
    const auto obs_dim = static_cast<Eigen::Index>(actor_.input_dim());
    const auto act_dim = static_cast<Eigen::Index>(actor_.output_dim());
    Eigen::MatrixXd critic_in(obs_dim + act_dim, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto* t = batch[static_cast<std::size_t>(j)];
        critic_in.col(j) << to_eigen(t->state), to_eigen(t->action);
    }
    const Eigen::VectorXd y = td_targets(batch);

    const Eigen::RowVectorXd q = critic_.forward_batch(critic_in);
    const Eigen::RowVectorXd diff = q - y.transpose();
    const double loss = diff.squaredNorm() / static_cast<double>(n);
    const Eigen::MatrixXd dq = 2.0 * diff / static_cast<double>(n);
    const auto grads = critic_.backward(critic_in, dq);
    if (grad_norm != nullptr) {
        *grad_norm = grads.params.norm();
    }
    neuro::adam_step(critic_, grads.params, {config_.critic_lr});
    return loss;
}

double DdpgAgent::update_actor(std::span<const Transition* const> batch, double* grad_norm) {
    const auto n = static_cast<Eigen::Index>(batch.size());
    const auto obs_dim = static_cast<Eigen::Index>(actor_.input_dim());
    const auto act_dim = static_cast<Eigen::Index>(actor_.output_dim());
    Eigen::MatrixXd states(obs_dim, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        states.col(j) = to_eigen(batch[static_cast<std::size_t>(j)]->state);
    }
    Eigen::MatrixXd mu = actor_.forward_batch(states);
    override_bandwidth(mu);
    Eigen::MatrixXd policy_in(obs_dim + act_dim, n);
    policy_in << states, mu;
    const double objective = critic_.forward_batch(policy_in).mean();

    // Ascend mean Q(s, mu(s)): push -1/n through the critic into the action inputs.
    const Eigen::MatrixXd neg_mean = Eigen::MatrixXd::Constant(1, n, -1.0 / static_cast<double>(n));
    const auto through_critic = critic_.backward(policy_in, neg_mean);
    Eigen::MatrixXd d_action = through_critic.input.bottomRows(act_dim);
    if (config_.even_bandwidth) {
        d_action.bottomRows(static_cast<Eigen::Index>(system_.num_devices)).setZero();
    }
    const auto grads = actor_.backward(states, d_action);
    if (grad_norm != nullptr) {
        *grad_norm = grads.params.norm();
    }
    neuro::adam_step(actor_, grads.params, {config_.actor_lr});
    return objective;
}

void DdpgAgent::update_targets() {
    neuro::soft_update(target_critic_, critic_, config_.tau);
    neuro::soft_update(target_actor_, actor_, config_.tau);
}

TrainDiagnostics DdpgAgent::train_step(Rng& replay_rng) {
    const auto batch = sample_batch(replay_rng);
    TrainDiagnostics diag;
    diag.critic_loss = update_critic(batch, &diag.critic_grad_norm);
    diag.actor_objective = update_actor(batch, &diag.actor_grad_norm);
    update_targets();
    return diag;
}

void DdpgAgent::save_checkpoint(const std::filesystem::path& dir, const std::string& config_hash) const {
    std::filesystem::create_directories(dir);
    neuro::save_net(actor_, dir / "actor.bin");
    neuro::save_net(target_actor_, dir / "actor_target.bin");
    neuro::save_net(critic_, dir / "critic.bin");
    neuro::save_net(target_critic_, dir / "critic_target.bin");
    nlohmann::json meta;
    meta["format"] = "feel-ddpg-checkpoint";
    meta["version"] = kCheckpointVersion;
    meta["episodes"] = episode_;
    meta["noise_sigma"] = sigma_;
    meta["config_hash"] = config_hash;
    meta["even_bandwidth"] = config_.even_bandwidth;
    meta["num_devices"] = system_.num_devices;
    std::ofstream out(dir / "checkpoint.json");
    out << meta.dump(2) << '\n';
    if (!out) {
        throw std::runtime_error("failed writing checkpoint metadata in " + dir.string());
    }
}

void DdpgAgent::load_checkpoint(const std::filesystem::path& dir) {
    std::ifstream in(dir / "checkpoint.json");
    if (!in) {
        throw std::runtime_error("missing checkpoint: " + (dir / "checkpoint.json").string());
    }
    nlohmann::json meta;
    in >> meta;
    if (meta.value("format", "") != "feel-ddpg-checkpoint" || meta.value("version", 0) != kCheckpointVersion) {
        throw std::runtime_error("unsupported checkpoint format in " + dir.string());
    }
    auto load_into = [&](neuro::MlpNet& net, const char* name) {
        auto loaded = neuro::load_net(dir / name);
        if (!loaded.same_architecture(net)) {
            throw std::runtime_error(std::string("checkpoint architecture mismatch for ") + name);
        }
        net.parameters() = loaded.parameters();
        net.adam_state() = {};
    };
    load_into(actor_, "actor.bin");
    load_into(target_actor_, "actor_target.bin");
    load_into(critic_, "critic.bin");
    load_into(target_critic_, "critic_target.bin");
    episode_ = meta.value("episodes", 0);
    sigma_ = meta.value("noise_sigma", sigma_);
}

AgentEpisodeSummary run_episode(DdpgAgent& agent, Environment& env, const EpisodeOptions& options, Rng& noise_rng,
                                Rng& replay_rng, TraceWriter* trace) {
    AgentEpisodeSummary out;
    EpisodeStats stats;
    out.noise_sigma = agent.current_sigma();
    double loss_sum = 0.0;
    double objective_sum = 0.0;

    const auto train_once = [&] {
        const auto d = agent.train_step(replay_rng);
        loss_sum += d.critic_loss;
        objective_sum += d.actor_objective;
        ++out.train_steps;
    };

    while (!env.done()) {
        const Observation obs = env.observe();
        const int played = env.round();
        auto choice = agent.select_action(obs, options.explore, noise_rng);
        StepResult step = env.step(choice.action);
        stats.add(step);
        if (trace != nullptr) {
            trace->write_row(options.episode, played, choice.action, step, env.states());
        }
        agent.store({obs.flatten(), std::move(choice.raw), agent.learner_reward(step.reward),
                     step.observation.flatten(), step.done});
        if (options.train && agent.config().train_every_step && agent.buffer().size() >= agent.config().batch_size) {
            train_once();
        }
    }
    if (options.train && !agent.config().train_every_step && agent.buffer().size() >= agent.config().batch_size) {
        for (int i = 0; i < agent.config().updates_per_episode; ++i) {
            train_once();
        }
    }

    out.episode = stats.summary();
    if (out.train_steps > 0) {
        out.mean_critic_loss = loss_sum / out.train_steps;
        out.mean_actor_objective = objective_sum / out.train_steps;
    }
    return out;
}

}  // namespace feel
