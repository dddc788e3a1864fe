#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "syncnet/config.hpp"

namespace {

int run_command(const std::string& command, const std::string& config_path,
                const std::string& out_dir, std::optional<std::uint64_t> seed, bool quiet) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) {
        std::cerr << "syncnet: cannot read config file '" << config_path << "'\n";
        return 1;
    }
    std::ostringstream buf;
    buf << in.rdbuf();

    syncnet::ExperimentConfig cfg;
    try {
        cfg = syncnet::parse_config(buf.str());
    } catch (const std::exception& e) {
        std::cerr << "syncnet: " << e.what() << "\n";
        return 1;
    }
    if (cfg.effective["command"] != command) {
        std::cerr << "syncnet: config declares command '"
                  << cfg.effective["command"].get<std::string>() << "' but '" << command
                  << "' was invoked\n";
        return 1;
    }
    if (seed) syncnet::apply_seed_override(cfg, *seed);
    return syncnet::run(cfg, out_dir, quiet);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synchronisation analysis and simulation for diffusively coupled networks"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    bool quiet = false;

    for (const char* name : {"analyze", "simulate", "critical", "sweep", "persistence"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "path to the JSON experiment config")->required();
        sub->add_option("--out", out_dir, "output directory (default: current)");
        sub->add_option("--seed", seed, "override the run seed");
        sub->add_flag("--quiet", quiet, "suppress progress output");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();
    return run_command(command, config_path, out_dir, seed, quiet);
}
