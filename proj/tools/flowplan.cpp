// flowplan: command-line driver for the planning pipeline.

#include "flowplan/commands.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <new>
#include <string>

namespace cmd = flowplan::commands;

int main(int argc, char** argv) {
    CLI::App app{"Stochastic double-gyre MDP path planner"};
    app.require_subcommand(1);

    std::string config_path;
    unsigned threads = 0;
    std::string out;
    bool threads_set = false;

    using Handler = std::function<int(const flowplan::RunConfig&, const cmd::Options&, std::ostream&)>;
    const std::map<std::string, std::pair<std::string, Handler>> table{
        {"generate-env", {"synthesize the double-gyre environment container", cmd::generate_env}},
        {"reduce", {"reduce a raw velocity ensemble to reduced-order form", cmd::reduce}},
        {"build", {"build the sparse MDP model", cmd::build}},
        {"solve", {"run value iteration and extract the policy", cmd::solve}},
        {"rollout", {"apply the policy to every flow realization", cmd::rollout}},
        {"verify", {"run the oracle and invariant checks", cmd::verify}},
        {"bench", {"time model building across sizes and thread counts", cmd::bench}},
    };
    std::map<CLI::App*, Handler> handlers;
    for (const auto& [name, entry] : table) {
        CLI::App* sub = app.add_subcommand(name, entry.first);
        sub->add_option("--config", config_path, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--threads", threads, "worker threads (0 = all hardware threads)")
            ->each([&](const std::string&) { threads_set = true; });
        sub->add_option("--out", out, "output path overriding the config");
        handlers.emplace(sub, entry.second);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? cmd::kOk : cmd::kUsage;
    }

    try {
        const flowplan::RunConfig config = flowplan::load_config(config_path);
        cmd::Options opts;
        if (threads_set) opts.threads = threads;
        if (!out.empty()) opts.out = out;
        for (const auto& [sub, handler] : handlers)
            if (sub->parsed()) return handler(config, opts, std::cout);
    } catch (const flowplan::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return cmd::kConfigError;
    } catch (const flowplan::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return cmd::kIoError;
    } catch (const flowplan::ContractViolation& e) {
        std::cerr << "contract violation: " << e.what() << '\n';
        return cmd::kContractViolation;
    } catch (const flowplan::VerificationFailure& e) {
        std::cerr << "verification failure: " << e.what() << '\n';
        return cmd::kVerificationFailure;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return cmd::kIoError;
    } catch (const std::bad_alloc&) {
        std::cerr << "out of memory\n";
        return cmd::kContractViolation;
    }
    return cmd::kUsage;
}
