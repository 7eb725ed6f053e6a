#include "feel/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using feel::harness::ExperimentConfig;

struct CommonOptions {
    std::string config_path;
    std::string preset = "reference";
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<int> parallel;
    std::optional<int> episodes;
    std::optional<int> repeats;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config_path, "JSON experiment config")->check(CLI::ExistingFile);
    cmd->add_option("--preset", o.preset, "Base preset")->check(CLI::IsMember({"reference", "desk"}));
    cmd->add_option("--seed", o.seed, "Master seed");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--parallel", o.parallel, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--episodes", o.episodes, "Training episodes")->check(CLI::PositiveNumber);
    cmd->add_option("--repeats", o.repeats, "Evaluation repeats")->check(CLI::PositiveNumber);
}

// Preset first, then the config file, then explicit flags.
ExperimentConfig resolve(const CommonOptions& o) {
    ExperimentConfig c = feel::harness::preset(o.preset);
    if (!o.config_path.empty()) {
        c = feel::harness::load_config(o.config_path, c);
    }
    if (o.seed) {
        c.seed = *o.seed;
    }
    if (!o.out.empty()) {
        c.output_dir = o.out;
    }
    if (o.parallel) {
        c.parallel = *o.parallel;
    }
    if (o.episodes) {
        c.episodes = *o.episodes;
        c.agent.total_episodes = *o.episodes;
        c.trace_episodes = {*o.episodes - 1};
    }
    if (o.repeats) {
        c.repeats = *o.repeats;
    }
    return c;
}

void print_aggregates(const feel::harness::RunRecord& r) {
    for (const auto& a : r.aggregates) {
        std::cout << a.strategy << " @ " << a.axis_value << ": rounds " << a.rounds.mean << " cost " << a.cost.mean
                  << " (+/- " << a.cost.std << ")\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Battery-constrained federated edge learning simulator with a DDPG resource allocator"};
    app.set_version_flag("--version", std::string(feel::harness::tool_version()));
    app.require_subcommand(1);

    CommonOptions train_opts;
    auto* train = app.add_subcommand("train", "Train a DDPG agent and write training_log.csv and a checkpoint");
    add_common(train, train_opts);
    bool even = false;
    train->add_flag("--even-bandwidth", even, "Train the even-bandwidth variant (E-DDPG)");

    CommonOptions eval_opts;
    auto* evaluate = app.add_subcommand("evaluate", "Noise-free rollouts of a saved checkpoint");
    add_common(evaluate, eval_opts);
    std::string checkpoint;
    evaluate->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);

    CommonOptions sweep_opts;
    auto* sweep = app.add_subcommand("sweep", "Sweep static factor, user count or total bandwidth");
    add_common(sweep, sweep_opts);
    std::string axis;
    std::vector<double> values;
    bool agents = false;
    std::string agent_checkpoints;
    sweep->add_option("--axis", axis, "static_factor | num_users | total_bandwidth")
        ->check(CLI::IsMember({"static_factor", "num_users", "total_bandwidth"}));
    sweep->add_option("--values", values, "Sweep points (comma separated)")->delimiter(',');
    sweep->add_flag("--agents", agents, "Also train and evaluate DDPG and E-DDPG at each point");
    sweep->add_option("--agent-checkpoints", agent_checkpoints,
                      "Load agents from <dir>/<strategy>_<point> instead of training");

    CommonOptions fed_opts;
    auto* fed = app.add_subcommand("fedavg-demo", "Federated averaging on a synthetic least-squares task");
    add_common(fed, fed_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            auto c = resolve(train_opts);
            if (even) {
                c.agent.even_bandwidth = true;
            }
            const auto r = feel::harness::cmd_train(c);
            const auto& last = r.episodes.back().summary;
            std::cout << "trained " << r.episodes.size() << " episodes; last episode rounds " << last.rounds_completed
                      << " cost " << last.mean_cost << "\nwrote " << c.output_dir << "\n";
        } else if (*evaluate) {
            auto c = resolve(eval_opts);
            c.checkpoint = checkpoint;
            print_aggregates(feel::harness::cmd_evaluate(c));
            std::cout << "wrote " << c.output_dir << "\n";
        } else if (*sweep) {
            auto c = resolve(sweep_opts);
            if (!axis.empty()) {
                c.axis = feel::harness::parse_axis(axis);
                c.sweep_values.clear();
            }
            if (!values.empty()) {
                c.sweep_values = values;
            } else if (c.sweep_values.empty()) {
                c.sweep_values = feel::harness::default_sweep_values(c, c.axis);
            }
            if (agents) {
                c.sweep_agents = true;
            }
            if (!agent_checkpoints.empty()) {
                c.agent_checkpoints = agent_checkpoints;
            }
            print_aggregates(feel::harness::cmd_sweep(c));
            std::cout << "wrote " << c.output_dir << "\n";
        } else if (*fed) {
            const auto c = resolve(fed_opts);
            const auto r = feel::harness::cmd_fedavg_demo(c);
            std::cout << "global loss " << r.fedavg_losses.front() << " -> " << r.fedavg_losses.back() << "\nwrote "
                      << c.output_dir << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
