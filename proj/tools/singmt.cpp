#include "singmt/cli.hpp"

#include <CLI11.hpp>

int main(int argc, char** argv) {
    CLI::App app{"singmt: numerical toolkit for the singular mean-field equation on the sphere"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    unsigned seed = 0;
    bool seed_given = false;
    int threads = 1;

    std::vector<std::string> verbs = {"analyze", "solve", "radial", "onofri", "blowup", "morse"};
    std::string chosen;
    for (const std::string& v : verbs) {
        CLI::App* sub = app.add_subcommand(v);
        sub->add_option("--config", config_path, "path to the JSON run config")->required();
        sub->add_option("--out", out_dir, "output directory (overrides config)");
        sub->add_option("--seed", seed, "random seed (overrides config)")
            ->each([&](const std::string&) { seed_given = true; });
        sub->add_option("--threads", threads, "worker threads (SINGMT_THREADS overrides)");
        sub->callback([&, v]() { chosen = v; });
    }

    CLI11_PARSE(app, argc, argv);
    return singmt::cli::run(chosen, config_path, out_dir, seed, seed_given, threads);
}
