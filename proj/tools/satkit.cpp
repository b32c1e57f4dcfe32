// satkit: review-corpus satisfaction analytics pipeline.
//
// Subcommands correspond to pipeline stages; each reads the previous stages'
// artifacts from the output directory and writes its own:
//
//   ingest -> sweep -> fit -> {graph, link, panel, cluster} -> report
//
// Logs go to stderr; data only ever goes to files. Exit codes: 1 bad
// arguments, 2 missing upstream artifact, 3 computation error (details in
// <output_dir>/diagnostics.txt).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "satkit/pipeline.hpp"
#include "satkit/version.hpp"

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::string> output_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<int> k;
};

int run(satkit::Stage stage, const Overrides& ov) {
    satkit::PipelineConfig config;
    try {
        config = satkit::load_pipeline_config(ov.config_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "satkit: %s\n", e.what());
        return 1;
    }
    if (ov.output_dir) config.output_dir = *ov.output_dir;
    if (ov.seed) config.seed = *ov.seed;
    if (ov.threads) config.threads = *ov.threads;
    if (ov.k) config.lda.k = *ov.k;
    // The base seed from the environment wins over config and flags.
    if (const char* env_seed = std::getenv("SATKIT_SEED")) {
        config.seed = std::strtoull(env_seed, nullptr, 10);
    }

    try {
        const auto written = satkit::run_stage(stage, config);
        std::fprintf(stderr, "satkit %s: wrote %zu artifact(s) under %s\n",
                     std::string(satkit::stage_name(stage)).c_str(), written.size(),
                     config.output_dir.c_str());
        return 0;
    } catch (const satkit::MissingUpstreamError& e) {
        std::fprintf(stderr, "satkit %s: %s\n", std::string(satkit::stage_name(stage)).c_str(),
                     e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "satkit %s: error: %s\n",
                     std::string(satkit::stage_name(stage)).c_str(), e.what());
        std::error_code ec;
        std::filesystem::create_directories(config.output_dir, ec);
        std::ofstream diag(std::filesystem::path(config.output_dir) / "diagnostics.txt",
                           std::ios::trunc);
        diag << "stage: " << satkit::stage_name(stage) << "\n"
             << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"satkit: quantitative satisfaction insights from free-text service reviews"};
    app.set_version_flag("--version", satkit::kVersion);
    app.require_subcommand(1);

    Overrides ov;
    for (satkit::Stage stage :
         {satkit::Stage::ingest, satkit::Stage::sweep, satkit::Stage::fit, satkit::Stage::graph,
          satkit::Stage::link, satkit::Stage::panel, satkit::Stage::cluster, satkit::Stage::report}) {
        auto* sub = app.add_subcommand(std::string(satkit::stage_name(stage)));
        sub->add_option("-c,--config", ov.config_path, "pipeline config JSON")->required();
        sub->add_option("-o,--out", ov.output_dir, "output directory (overrides config)");
        sub->add_option("-s,--seed", ov.seed, "base seed (overrides config; SATKIT_SEED wins)");
        sub->add_option("-t,--threads", ov.threads, "worker threads, 0 = hardware");
        if (stage == satkit::Stage::fit) {
            sub->add_option("-k,--topics", ov.k, "topic count (overrides sweep selection)");
        }
        sub->callback([stage, &ov] { std::exit(run(stage, ov)); });
    }

    CLI11_PARSE(app, argc, argv);
    return 0;
}
