// Pipeline driver. Runs one stage or the whole chain against a JSON config;
// exit code 0 on success, 1 on runtime errors, 2 on config/dependency errors.
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "stride/error.hpp"
#include "stride/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"street exercise deprivation analytics pipeline"};

    std::string config_path;
    std::string stage = "all";
    int threads = 0;
    std::string seed_str;
    bool validate_only = false;

    app.add_option("--config", config_path, "JSON pipeline config (empty: all defaults)");
    app.add_option("--stage", stage,
                   "stage to run: synth ingest graph features train explain classify mismatch "
                   "simulate report, or 'all'");
    app.add_option("--threads", threads, "worker cap for parallel sections (results identical)");
    app.add_option("--seed", seed_str, "master seed override");
    app.add_flag("--validate-config", validate_only,
                 "check the config and print the full echo with defaults");

    CLI11_PARSE(app, argc, argv);

    try {
        stride::PipelineConfig config;
        if (!config_path.empty()) config = stride::load_config(config_path);
        if (threads > 0) config.threads = threads;
        if (!seed_str.empty()) {
            try {
                config.seed = std::stoull(seed_str);
            } catch (const std::exception&) {
                throw stride::ConfigError("--seed must be an unsigned integer");
            }
        }

        if (validate_only) {
            std::cout << stride::config_echo(config) << "\n";
            return 0;
        }

        if (stage == "all") {
            for (const auto& name : stride::kStageNames) {
                std::cout << "[stage] " << name << "\n";
                stride::run_stage(name, config);
            }
        } else {
            stride::run_stage(stage, config);
        }
        return 0;
    } catch (const stride::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
