#include "feel/harness.hpp"

#include "feel/csv.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace feel::harness {

using nlohmann::json;

namespace {

constexpr std::uint64_t kEvaluationOffset = 1'000'000'000ULL;

std::string timestamp_utc(std::chrono::system_clock::time_point t) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open output file " + path.string());
    }
    return out;
}

void finish_output(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

// Writes meta.json; the only output that carries wall-clock time.
void write_meta(const ExperimentConfig& config, std::string_view command,
                std::chrono::system_clock::time_point started) {
    const auto finished = std::chrono::system_clock::now();
    json meta;
    meta["tool"] = "feel";
    meta["version"] = tool_version();
    meta["command"] = command;
    meta["config_hash"] = config_hash(config);
    meta["seed"] = config.seed;
    meta["started_at"] = timestamp_utc(started);
    meta["finished_at"] = timestamp_utc(finished);
    meta["elapsed_seconds"] = std::chrono::duration<double>(finished - started).count();
    meta["parallel"] = config.parallel;
    const auto path = std::filesystem::path(config.output_dir) / "meta.json";
    auto out = open_output(path);
    out << meta.dump(2) << '\n';
    finish_output(out, path);
}

void write_config_echo(const ExperimentConfig& config) {
    const auto path = std::filesystem::path(config.output_dir) / "config.json";
    auto out = open_output(path);
    out << to_json(config) << '\n';
    finish_output(out, path);
}

void run_parallel(std::size_t tasks, int workers, const std::function<void(std::size_t)>& fn) {
    const auto n = static_cast<std::size_t>(std::max(1, workers));
    if (n == 1 || tasks <= 1) {
        for (std::size_t i = 0; i < tasks; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(tasks);
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < std::min(n, tasks); ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < tasks; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

json pair(double lo, double hi) { return json::array({lo, hi}); }

void read_pair(const json& j, const char* key, double& lo, double& hi) {
    if (j.contains(key)) {
        const auto& v = j.at(key);
        if (!v.is_array() || v.size() != 2) {
            throw std::invalid_argument(std::string("config: ") + key + " must be [lo, hi]");
        }
        lo = v[0].get<double>();
        hi = v[1].get<double>();
    }
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!j.is_object()) {
        throw std::invalid_argument("config: " + std::string(where) + " must be an object");
    }
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw std::invalid_argument("config: unknown key '" + key + "' in " + std::string(where));
        }
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

json to_json_value(const ExperimentConfig& c) {
    const auto& s = c.system;
    const auto& f = c.fleet;
    const auto& a = c.agent;
    json j;
    j["preset"] = c.preset;
    j["system"] = {{"num_devices", s.num_devices},
                   {"max_rounds", s.max_rounds},
                   {"local_epochs", s.local_epochs},
                   {"total_bandwidth", s.total_bandwidth},
                   {"model_size", s.model_size},
                   {"noise_power", s.noise_power},
                   {"lambda_tradeoff", s.lambda_tradeoff},
                   {"eta_min", s.eta_min},
                   {"bandwidth_floor_frac", s.bandwidth_floor_frac},
                   {"freq_jitter", pair(s.freq_jitter_lo, s.freq_jitter_hi)},
                   {"channel_gain_floor", s.channel_gain_floor},
                   {"channel_clip", s.channel_clip},
                   {"reward_cost_scale", s.reward_cost_scale},
                   {"energy_counts_epochs", s.energy_counts_epochs}};
    j["fleet"] = {{"battery", pair(f.battery_lo, f.battery_hi)},
                  {"base_freq", pair(f.freq_lo, f.freq_hi)},
                  {"cycles_per_sample", pair(f.cycles_lo, f.cycles_hi)},
                  {"dataset_size", pair(f.dataset_lo, f.dataset_hi)},
                  {"chip_coeff", pair(f.chip_lo, f.chip_hi)},
                  {"tx_power", f.tx_power}};
    j["agent"] = {{"actor_hidden", a.actor_hidden},
                  {"critic_hidden", a.critic_hidden},
                  {"actor_lr", a.actor_lr},
                  {"critic_lr", a.critic_lr},
                  {"gamma", a.gamma},
                  {"tau", a.tau},
                  {"batch_size", a.batch_size},
                  {"buffer_capacity", a.buffer_capacity},
                  {"updates_per_episode", a.updates_per_episode},
                  {"train_every_step", a.train_every_step},
                  {"noise_start", a.noise_start},
                  {"noise_end", a.noise_end},
                  {"noise_decay_fraction", a.noise_decay_fraction},
                  {"reward_scale", a.reward_scale},
                  {"even_bandwidth", a.even_bandwidth}};
    j["sweep"] = {{"axis", to_string(c.axis)},
                  {"values", c.sweep_values},
                  {"static_factors", c.static_factors},
                  {"agents", c.sweep_agents},
                  {"agent_checkpoints", c.agent_checkpoints}};
    j["fedavg"] = {{"clients", c.fedavg.clients},
                   {"dim", c.fedavg.dim},
                   {"min_samples", c.fedavg.min_samples},
                   {"max_samples", c.fedavg.max_samples},
                   {"label_noise", c.fedavg.label_noise},
                   {"learning_rate", c.fedavg.learning_rate},
                   {"rounds", c.fedavg.rounds}};
    j["episodes"] = c.episodes;
    j["repeats"] = c.repeats;
    j["seed"] = c.seed;
    j["trace_episodes"] = c.trace_episodes;
    j["checkpoint"] = c.checkpoint;
    j["output_dir"] = c.output_dir;
    j["parallel"] = c.parallel;
    return j;
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string summary_reason(const EpisodeSummary& s) { return std::string(to_string(s.reason)); }

ExperimentConfig at_point(const ExperimentConfig& base, double value) {
    ExperimentConfig c = base;
    switch (base.axis) {
        case SweepAxis::num_users:
            c.system.num_devices = static_cast<std::size_t>(std::llround(value));
            break;
        case SweepAxis::total_bandwidth:
            c.system.total_bandwidth = value;
            break;
        case SweepAxis::static_factor:
        case SweepAxis::none:
            break;
    }
    return c;
}

std::vector<RunRow> rows_for(double axis_value, const std::string& strategy, double factor,
                             const std::vector<EpisodeSummary>& runs) {
    std::vector<RunRow> rows;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        rows.push_back({axis_value, strategy, factor, static_cast<int>(r), runs[r]});
    }
    return rows;
}

void write_run_rows(std::ostream& out, std::string_view axis_name, std::span<const RunRow> rows) {
    CsvRow(out) << axis_name << "strategy" << "factor" << "repeat" << "rounds_completed" << "mean_energy"
                << "mean_latency" << "mean_cost" << "total_reward" << "reason";
    for (const auto& r : rows) {
        CsvRow(out) << r.axis_value << r.strategy << r.factor << r.repeat << r.summary.rounds_completed
                    << r.summary.mean_energy << r.summary.mean_latency << r.summary.mean_cost
                    << r.summary.total_reward << summary_reason(r.summary);
    }
}

void write_aggregates(std::ostream& out, std::string_view axis_name, std::span<const PointAggregate> aggs) {
    CsvRow(out) << axis_name << "strategy" << "factor" << "repeats" << "rounds_mean" << "rounds_std"
                << "rounds_max" << "energy_mean" << "energy_std" << "latency_mean" << "latency_std" << "cost_mean"
                << "cost_std";
    for (const auto& a : aggs) {
        CsvRow(out) << a.axis_value << a.strategy << a.factor << a.repeats << a.rounds.mean << a.rounds.std
                    << a.rounds_max << a.energy.mean << a.energy.std << a.latency.mean << a.latency.std
                    << a.cost.mean << a.cost.std;
    }
}

std::vector<EpisodeSummary> evaluate_actor(const DdpgAgent& agent, const ExperimentConfig& config,
                                           bool even_bandwidth, const std::string& name) {
    auto actor = std::make_shared<ActorPolicy>(agent.actor(), config.system, name);
    if (even_bandwidth) {
        return evaluate_policy(EvenBandwidthPolicy(actor, config.system), config);
    }
    return evaluate_policy(*actor, config);
}

}  // namespace

std::string_view tool_version() noexcept { return FEEL_VERSION; }

std::string_view to_string(SweepAxis axis) noexcept {
    switch (axis) {
        case SweepAxis::none: return "none";
        case SweepAxis::static_factor: return "static_factor";
        case SweepAxis::num_users: return "num_users";
        case SweepAxis::total_bandwidth: return "total_bandwidth";
    }
    return "none";
}

SweepAxis parse_axis(std::string_view name) {
    for (auto a : {SweepAxis::none, SweepAxis::static_factor, SweepAxis::num_users, SweepAxis::total_bandwidth}) {
        if (to_string(a) == name) {
            return a;
        }
    }
    throw std::invalid_argument("unknown sweep axis '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
    system.validate();
    fleet.validate();
    agent.validate();
    if (episodes < 1 || repeats < 1 || parallel < 1) {
        throw std::invalid_argument("config: episodes, repeats and parallel must be at least 1");
    }
    if (axis != SweepAxis::none && sweep_values.empty()) {
        throw std::invalid_argument("config: sweep values must be non-empty when a sweep axis is set");
    }
    for (double v : sweep_values) {
        const bool ok = (axis == SweepAxis::static_factor && v >= system.eta_min && v <= 1.0) ||
                        (axis == SweepAxis::num_users && v >= 1.0 && v == std::floor(v)) ||
                        (axis == SweepAxis::total_bandwidth && v > 0.0) || axis == SweepAxis::none;
        if (!ok) {
            throw std::invalid_argument("config: sweep value out of range for axis " + std::string(to_string(axis)));
        }
    }
    if (static_factors.empty()) {
        throw std::invalid_argument("config: static_factors must be non-empty");
    }
    for (double f : static_factors) {
        if (!(f >= system.eta_min && f <= 1.0)) {
            throw std::invalid_argument("config: static factor outside [eta_min, 1]");
        }
    }
    if (fedavg.clients == 0 || fedavg.dim == 0 || fedavg.min_samples == 0 || fedavg.min_samples > fedavg.max_samples ||
        !(fedavg.learning_rate > 0.0) || fedavg.rounds < 0 || fedavg.label_noise < 0.0) {
        throw std::invalid_argument("config: invalid fedavg settings");
    }
}

ExperimentConfig reference_preset() {
    ExperimentConfig c;
    c.preset = "reference";
    c.episodes = 800;
    c.agent.total_episodes = c.episodes;
    c.trace_episodes = {c.episodes - 1};
    return c;
}

ExperimentConfig desk_preset() {
    ExperimentConfig c;
    c.preset = "desk";
    c.system.num_devices = 5;
    c.system.max_rounds = 200;
    c.system.total_bandwidth = 1.25e6;
    c.fleet.battery_lo = 4e3;
    c.fleet.battery_hi = 6e3;
    c.episodes = 300;
    c.agent.total_episodes = c.episodes;
    c.agent.gamma = 0.0;
    c.agent.actor_lr = 3e-6;
    c.agent.critic_lr = 1e-3;
    c.trace_episodes = {c.episodes - 1};
    return c;
}

ExperimentConfig preset(std::string_view name) {
    if (name == "reference") {
        return reference_preset();
    }
    if (name == "desk") {
        return desk_preset();
    }
    throw std::invalid_argument("unknown preset '" + std::string(name) + "' (expected reference or desk)");
}

std::vector<double> default_sweep_values(const ExperimentConfig& config, SweepAxis axis) {
    switch (axis) {
        case SweepAxis::static_factor:
            return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
        case SweepAxis::num_users:
            return {5, 10, 15, 20, 25};
        case SweepAxis::total_bandwidth: {
            const double scale = static_cast<double>(config.system.num_devices) / 20.0;
            std::vector<double> v;
            for (double mhz : {1.0, 3.0, 5.0, 7.0, 9.0}) {
                v.push_back(mhz * 1e6 * scale);
            }
            return v;
        }
        case SweepAxis::none:
            break;
    }
    return {};
}

std::string to_json(const ExperimentConfig& config) { return to_json_value(config).dump(2); }

ExperimentConfig from_json(std::string_view text, const ExperimentConfig& base) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: malformed JSON: ") + e.what());
    }
    check_keys(j, {"preset", "system", "fleet", "agent", "sweep", "fedavg", "episodes", "repeats", "seed",
                   "trace_episodes", "checkpoint", "output_dir", "parallel"},
               "config");
    ExperimentConfig c = base;
    try {
        read(j, "preset", c.preset);
        if (j.contains("system")) {
            const auto& s = j.at("system");
            check_keys(s, {"num_devices", "max_rounds", "local_epochs", "total_bandwidth", "model_size", "noise_power",
                           "lambda_tradeoff", "eta_min", "bandwidth_floor_frac", "freq_jitter", "channel_gain_floor",
                           "channel_clip", "reward_cost_scale", "energy_counts_epochs"},
                       "system");
            auto& o = c.system;
            read(s, "num_devices", o.num_devices);
            read(s, "max_rounds", o.max_rounds);
            read(s, "local_epochs", o.local_epochs);
            read(s, "total_bandwidth", o.total_bandwidth);
            read(s, "model_size", o.model_size);
            read(s, "noise_power", o.noise_power);
            read(s, "lambda_tradeoff", o.lambda_tradeoff);
            read(s, "eta_min", o.eta_min);
            read(s, "bandwidth_floor_frac", o.bandwidth_floor_frac);
            read_pair(s, "freq_jitter", o.freq_jitter_lo, o.freq_jitter_hi);
            read(s, "channel_gain_floor", o.channel_gain_floor);
            read(s, "channel_clip", o.channel_clip);
            read(s, "reward_cost_scale", o.reward_cost_scale);
            read(s, "energy_counts_epochs", o.energy_counts_epochs);
        }
        if (j.contains("fleet")) {
            const auto& f = j.at("fleet");
            check_keys(f, {"battery", "base_freq", "cycles_per_sample", "dataset_size", "chip_coeff", "tx_power"},
                       "fleet");
            auto& o = c.fleet;
            read_pair(f, "battery", o.battery_lo, o.battery_hi);
            read_pair(f, "base_freq", o.freq_lo, o.freq_hi);
            read_pair(f, "cycles_per_sample", o.cycles_lo, o.cycles_hi);
            read_pair(f, "dataset_size", o.dataset_lo, o.dataset_hi);
            read_pair(f, "chip_coeff", o.chip_lo, o.chip_hi);
            read(f, "tx_power", o.tx_power);
        }
        if (j.contains("agent")) {
            const auto& a = j.at("agent");
            check_keys(a, {"actor_hidden", "critic_hidden", "actor_lr", "critic_lr", "gamma", "tau", "batch_size",
                           "buffer_capacity", "updates_per_episode", "train_every_step", "noise_start", "noise_end",
                           "noise_decay_fraction", "reward_scale", "even_bandwidth"},
                       "agent");
            auto& o = c.agent;
            read(a, "actor_hidden", o.actor_hidden);
            read(a, "critic_hidden", o.critic_hidden);
            read(a, "actor_lr", o.actor_lr);
            read(a, "critic_lr", o.critic_lr);
            read(a, "gamma", o.gamma);
            read(a, "tau", o.tau);
            read(a, "batch_size", o.batch_size);
            read(a, "buffer_capacity", o.buffer_capacity);
            read(a, "updates_per_episode", o.updates_per_episode);
            read(a, "train_every_step", o.train_every_step);
            read(a, "noise_start", o.noise_start);
            read(a, "noise_end", o.noise_end);
            read(a, "noise_decay_fraction", o.noise_decay_fraction);
            read(a, "reward_scale", o.reward_scale);
            read(a, "even_bandwidth", o.even_bandwidth);
        }
        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            check_keys(s, {"axis", "values", "static_factors", "agents", "agent_checkpoints"}, "sweep");
            if (s.contains("axis")) {
                c.axis = parse_axis(s.at("axis").get<std::string>());
            }
            read(s, "values", c.sweep_values);
            read(s, "static_factors", c.static_factors);
            read(s, "agents", c.sweep_agents);
            read(s, "agent_checkpoints", c.agent_checkpoints);
        }
        if (j.contains("fedavg")) {
            const auto& f = j.at("fedavg");
            check_keys(f, {"clients", "dim", "min_samples", "max_samples", "label_noise", "learning_rate", "rounds"},
                       "fedavg");
            read(f, "clients", c.fedavg.clients);
            read(f, "dim", c.fedavg.dim);
            read(f, "min_samples", c.fedavg.min_samples);
            read(f, "max_samples", c.fedavg.max_samples);
            read(f, "label_noise", c.fedavg.label_noise);
            read(f, "learning_rate", c.fedavg.learning_rate);
            read(f, "rounds", c.fedavg.rounds);
        }
        read(j, "episodes", c.episodes);
        read(j, "repeats", c.repeats);
        read(j, "seed", c.seed);
        read(j, "trace_episodes", c.trace_episodes);
        read(j, "checkpoint", c.checkpoint);
        read(j, "output_dir", c.output_dir);
        read(j, "parallel", c.parallel);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    c.agent.total_episodes = c.episodes;
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read config file " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str(), base);
}

std::string config_hash(const ExperimentConfig& config) {
    json j = to_json_value(config);
    j.erase("output_dir");
    j.erase("parallel");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
    return buf;
}

std::string provenance_line(const ExperimentConfig& config) {
    return "# tool=feel version=" + std::string(tool_version()) + " config_hash=" + config_hash(config) +
           " seed=" + std::to_string(config.seed);
}

Stat describe(std::span<const double> values) {
    Stat s;
    if (values.empty()) {
        return s;
    }
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) {
            ss += (v - s.mean) * (v - s.mean);
        }
        s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

std::vector<PointAggregate> aggregate_runs(std::span<const RunRow> runs) {
    std::vector<PointAggregate> out;
    std::vector<std::vector<const RunRow*>> groups;
    for (const auto& r : runs) {
        auto it = std::find_if(out.begin(), out.end(), [&](const PointAggregate& a) {
            return a.axis_value == r.axis_value && a.strategy == r.strategy && a.factor == r.factor;
        });
        if (it == out.end()) {
            PointAggregate a;
            a.axis_value = r.axis_value;
            a.strategy = r.strategy;
            a.factor = r.factor;
            out.push_back(a);
            groups.emplace_back();
            it = out.end() - 1;
        }
        groups[static_cast<std::size_t>(it - out.begin())].push_back(&r);
    }
    for (std::size_t g = 0; g < out.size(); ++g) {
        std::vector<double> rounds;
        std::vector<double> energy;
        std::vector<double> latency;
        std::vector<double> cost;
        for (const auto* r : groups[g]) {
            rounds.push_back(r->summary.rounds_completed);
            energy.push_back(r->summary.mean_energy);
            latency.push_back(r->summary.mean_latency);
            cost.push_back(r->summary.mean_cost);
        }
        auto& a = out[g];
        a.repeats = static_cast<int>(groups[g].size());
        a.rounds = describe(rounds);
        a.rounds_max = *std::max_element(rounds.begin(), rounds.end());
        a.energy = describe(energy);
        a.latency = describe(latency);
        a.cost = describe(cost);
    }
    return out;
}

std::uint64_t training_episode_seed(std::uint64_t master, int episode) {
    return derive_seed(master, Stream::dynamics, static_cast<std::uint64_t>(episode));
}

std::uint64_t evaluation_seed(std::uint64_t master, int repeat) {
    return derive_seed(master, Stream::dynamics, kEvaluationOffset + static_cast<std::uint64_t>(repeat));
}

TrainResult train_agent(const ExperimentConfig& config, bool even_bandwidth,
                        const std::optional<std::filesystem::path>& trace_dir) {
    AgentConfig ac = config.agent;
    ac.total_episodes = config.episodes;
    ac.even_bandwidth = even_bandwidth;
    TrainResult result{DdpgAgent(config.system, ac, config.seed), {}};
    auto& agent = result.agent;

    Environment env(config.system);
    env.reset(config.fleet, config.seed);
    Rng noise_rng(derive_seed(config.seed, Stream::noise));
    Rng replay_rng(derive_seed(config.seed, Stream::replay));

    for (int ep = 0; ep < config.episodes; ++ep) {
        agent.set_episode(ep);
        env.reset(training_episode_seed(config.seed, ep));
        const bool traced = trace_dir.has_value() &&
                            std::find(config.trace_episodes.begin(), config.trace_episodes.end(), ep) !=
                                config.trace_episodes.end();
        AgentEpisodeSummary s;
        if (traced) {
            const auto path = *trace_dir / ("trace_" + std::to_string(ep) + ".csv");
            auto out = open_output(path);
            out << provenance_line(config) << '\n';
            TraceWriter trace(out, config.system.num_devices);
            trace.write_header();
            s = run_episode(agent, env, {true, true, ep}, noise_rng, replay_rng, &trace);
            finish_output(out, path);
        } else {
            s = run_episode(agent, env, {true, true, ep}, noise_rng, replay_rng);
        }
        result.episodes.push_back({ep, s.episode, s.mean_critic_loss, s.mean_actor_objective, s.noise_sigma});
    }
    agent.set_episode(config.episodes);
    return result;
}

std::vector<EpisodeSummary> evaluate_policy(const Policy& policy, const ExperimentConfig& config) {
    Environment env(config.system);
    env.reset(config.fleet, config.seed);
    std::vector<EpisodeSummary> out;
    for (int r = 0; r < config.repeats; ++r) {
        env.reset(evaluation_seed(config.seed, r));
        out.push_back(rollout(policy, env));
    }
    return out;
}

StaticBest best_static(const ExperimentConfig& config) {
    StaticBest best;
    bool have = false;
    bool best_complete = false;
    double best_cost = 0.0;
    double best_rounds = 0.0;
    for (double f : config.static_factors) {
        auto runs = evaluate_policy(StaticPolicy(f, config.system), config);
        bool complete = true;
        double cost = 0.0;
        double rounds = 0.0;
        for (const auto& r : runs) {
            complete = complete && r.rounds_completed == config.system.max_rounds;
            cost += r.mean_cost;
            rounds += r.rounds_completed;
        }
        cost /= static_cast<double>(runs.size());
        const bool better = !have || (complete && !best_complete) ||
                            (complete && best_complete && cost < best_cost) ||
                            (!complete && !best_complete && rounds > best_rounds);
        if (better) {
            have = true;
            best_complete = complete;
            best_cost = cost;
            best_rounds = rounds;
            best.factor = f;
            best.runs = std::move(runs);
        }
    }
    return best;
}

RunRecord cmd_train(const ExperimentConfig& config) {
    config.validate();
    const auto started = std::chrono::system_clock::now();
    const std::filesystem::path out_dir(config.output_dir);
    std::filesystem::create_directories(out_dir);
    write_config_echo(config);

    auto trained = train_agent(config, config.agent.even_bandwidth, out_dir);
    RunRecord record{config_hash(config), config.seed, std::move(trained.episodes), {}, {}, {}};

    const auto log_path = out_dir / "training_log.csv";
    auto log = open_output(log_path);
    log << provenance_line(config) << '\n';
    CsvRow(log) << "episode" << "return" << "rounds_completed" << "critic_loss" << "actor_objective"
                << "noise_sigma" << "mean_cost" << "mean_latency" << "mean_energy" << "reason";
    for (const auto& e : record.episodes) {
        CsvRow(log) << e.episode << e.summary.total_reward << e.summary.rounds_completed << e.critic_loss
                    << e.actor_objective << e.noise_sigma << e.summary.mean_cost << e.summary.mean_latency
                    << e.summary.mean_energy << summary_reason(e.summary);
    }
    finish_output(log, log_path);

    trained.agent.save_checkpoint(out_dir / "checkpoint", record.config_hash);
    write_meta(config, "train", started);
    return record;
}

RunRecord cmd_sweep(const ExperimentConfig& config) {
    config.validate();
    if (config.axis == SweepAxis::none) {
        throw std::invalid_argument("sweep: no sweep axis configured");
    }
    const auto started = std::chrono::system_clock::now();
    const std::filesystem::path out_dir(config.output_dir);
    std::filesystem::create_directories(out_dir);
    write_config_echo(config);

    struct Task {
        std::size_t point;
        std::string strategy;
    };
    std::vector<Task> tasks;
    for (std::size_t p = 0; p < config.sweep_values.size(); ++p) {
        tasks.push_back({p, config.axis == SweepAxis::static_factor ? "static" : "static_best"});
        if (config.sweep_agents && config.axis != SweepAxis::static_factor) {
            tasks.push_back({p, "ddpg"});
            tasks.push_back({p, "e_ddpg"});
        }
    }
    const std::string hash = config_hash(config);

    std::vector<std::vector<RunRow>> results(tasks.size());
    run_parallel(tasks.size(), config.parallel, [&](std::size_t i) {
        const auto& task = tasks[i];
        const double value = config.sweep_values[task.point];
        const ExperimentConfig point = at_point(config, value);
        if (task.strategy == "static") {
            results[i] = rows_for(value, "static", value, evaluate_policy(StaticPolicy(value, point.system), point));
        } else if (task.strategy == "static_best") {
            const auto best = best_static(point);
            results[i] = rows_for(value, "static_best", best.factor, best.runs);
        } else {
            const bool even = task.strategy == "e_ddpg";
            const std::string label = task.strategy + "_" + std::to_string(task.point);
            AgentConfig ac = point.agent;
            ac.even_bandwidth = even;
            if (!config.agent_checkpoints.empty()) {
                DdpgAgent agent(point.system, ac, point.seed);
                agent.load_checkpoint(std::filesystem::path(config.agent_checkpoints) / label);
                results[i] = rows_for(value, task.strategy, 0.0, evaluate_actor(agent, point, even, task.strategy));
            } else {
                auto trained = train_agent(point, even);
                trained.agent.save_checkpoint(out_dir / "checkpoints" / label, hash);
                results[i] =
                    rows_for(value, task.strategy, 0.0, evaluate_actor(trained.agent, point, even, task.strategy));
            }
        }
    });

    RunRecord record{hash, config.seed, {}, {}, {}, {}};
    for (auto& r : results) {
        record.runs.insert(record.runs.end(), r.begin(), r.end());
    }
    record.aggregates = aggregate_runs(record.runs);

    const std::string axis_name(to_string(config.axis));
    const auto agg_path = out_dir / ("sweep_" + axis_name + ".csv");
    auto agg = open_output(agg_path);
    agg << provenance_line(config) << '\n';
    write_aggregates(agg, axis_name, record.aggregates);
    finish_output(agg, agg_path);

    const auto runs_path = out_dir / ("sweep_" + axis_name + "_runs.csv");
    auto runs = open_output(runs_path);
    runs << provenance_line(config) << '\n';
    write_run_rows(runs, axis_name, record.runs);
    finish_output(runs, runs_path);

    write_meta(config, "sweep", started);
    return record;
}

RunRecord cmd_evaluate(const ExperimentConfig& config) {
    config.validate();
    if (config.checkpoint.empty()) {
        throw std::invalid_argument("evaluate: no checkpoint directory given");
    }
    const auto started = std::chrono::system_clock::now();
    const std::filesystem::path ckpt(config.checkpoint);
    std::ifstream meta_in(ckpt / "checkpoint.json");
    if (!meta_in) {
        throw std::runtime_error("missing checkpoint: " + (ckpt / "checkpoint.json").string());
    }
    const bool even = json::parse(meta_in).value("even_bandwidth", false);

    AgentConfig ac = config.agent;
    ac.even_bandwidth = even;
    DdpgAgent agent(config.system, ac, config.seed);
    agent.load_checkpoint(ckpt);

    const std::string name = even ? "e_ddpg" : "ddpg";
    auto actor = std::make_shared<ActorPolicy>(agent.actor(), config.system, name);
    std::shared_ptr<const Policy> policy = actor;
    if (even) {
        policy = even_bandwidth_wrapper(actor, config.system);
    }

    const std::filesystem::path out_dir(config.output_dir);
    std::filesystem::create_directories(out_dir);
    write_config_echo(config);

    RunRecord record{config_hash(config), config.seed, {}, {}, {}, {}};
    Environment env(config.system);
    env.reset(config.fleet, config.seed);
    for (int r = 0; r < config.repeats; ++r) {
        env.reset(evaluation_seed(config.seed, r));
        const auto path = out_dir / ("trace_" + std::to_string(r) + ".csv");
        auto out = open_output(path);
        out << provenance_line(config) << '\n';
        TraceWriter trace(out, config.system.num_devices);
        trace.write_header();
        const auto summary = rollout(*policy, env, &trace, r);
        finish_output(out, path);
        record.runs.push_back({0.0, name, 0.0, r, summary});
    }
    record.aggregates = aggregate_runs(record.runs);

    const auto eval_path = out_dir / "evaluation.csv";
    auto eval = open_output(eval_path);
    eval << provenance_line(config) << '\n';
    write_run_rows(eval, "point", record.runs);
    finish_output(eval, eval_path);

    const auto sum_path = out_dir / "evaluation_summary.csv";
    auto sum = open_output(sum_path);
    sum << provenance_line(config) << '\n';
    write_aggregates(sum, "point", record.aggregates);
    finish_output(sum, sum_path);

    write_meta(config, "evaluate", started);
    return record;
}

RunRecord cmd_fedavg_demo(const ExperimentConfig& config) {
    config.validate();
    const auto started = std::chrono::system_clock::now();
    const auto& f = config.fedavg;
    Rng rng(derive_seed(config.seed, Stream::fedavg));
    const auto task = fedavg::make_synthetic(f.clients, f.dim, f.min_samples, f.max_samples, f.label_noise, rng);
    const Eigen::VectorXd optimum = fedavg::centralized_optimum(task.clients);

    fedavg::GlobalModel model;
    model.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(f.dim));

    const std::filesystem::path out_dir(config.output_dir);
    std::filesystem::create_directories(out_dir);
    write_config_echo(config);

    const auto path = out_dir / "fedavg_loss.csv";
    auto out = open_output(path);
    out << provenance_line(config) << '\n';
    CsvRow(out) << "round" << "global_loss" << "loss_ratio" << "distance_to_optimum";

    RunRecord record{config_hash(config), config.seed, {}, {}, {}, {}};
    const double initial = fedavg::global_loss(model, task.clients);
    const auto emit = [&](int round) {
        const double loss = fedavg::global_loss(model, task.clients);
        record.fedavg_losses.push_back(loss);
        CsvRow(out) << round << loss << (initial > 0.0 ? loss / initial : 0.0) << (model.weights - optimum).norm();
    };
    emit(0);
    for (int k = 1; k <= f.rounds; ++k) {
        const auto step = fedavg::run_fedavg(task.clients, model, f.learning_rate, config.system.local_epochs, 1);
        model = step.model;
        model.round = k;
        emit(k);
    }
    finish_output(out, path);
    write_meta(config, "fedavg-demo", started);
    return record;
}

}  // namespace feel::harness
