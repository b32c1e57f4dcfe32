#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace satkit {

// Pipeline stages in dependency order:
//   ingest -> sweep -> fit -> {graph, link, panel, cluster} -> report
// (panel and cluster also read the graph stage's polarity labels).
enum class Stage { ingest, sweep, fit, graph, link, panel, cluster, report };

std::string_view stage_name(Stage s);
std::optional<Stage> stage_from_name(std::string_view name);

struct PipelineConfig {
    struct Inputs {
        std::string reviews;
        std::string register_table;
        std::string imd;
        std::string ccg;
    } inputs;

    std::string output_dir = "out";
    std::uint64_t seed = 42;
    unsigned threads = 0;  // 0 = hardware; never part of the config hash

    struct Preprocess {
        int min_token_len = 3;
        long long min_count = 10;
        long long max_count = 100000;
        std::string stemmer = "porter";  // or "none"
        std::string stopwords_file;      // optional override, one word per line
    } preprocess;

    struct Sweep {
        int k_min = 3;
        int k_max = 100;
        int step = 1;
        int iterations = 200;
        int burn_in = 100;
        int top_words = 10;
        double frex_weight = 0.7;
    } sweep;

    struct Lda {
        int k = 0;  // 0 = take the sweep stage's selection
        std::optional<double> alpha;
        double beta = 0.01;
        int iterations = 1000;
        int burn_in = 500;
        int sample_lag = 10;
    } lda;

    struct Graph {
        double edge_quantile = 0.90;
        double resolution = 1.0;
        double polarity_band = 0.02;
    } graph;

    struct Forest {
        int trees = 500;
        int mtry = 0;
        int min_node = 5;
        std::string mode = "classification";
    } forest;

    struct Linreg {
        int folds = 5;
    } linreg;

    struct Panel {
        std::string robust = "hc1";  // or "cluster_ccg"
    } panel;

    struct Cluster {
        int k = 100;
        int restarts = 10;
        int max_iters = 100;
        int top_terms = 10;
    } cluster;
};

PipelineConfig load_pipeline_config(const std::string& path);
// Canonical JSON used for the config fingerprint (threads and output paths
// excluded, so re-runs with different parallelism hash identically).
std::string canonical_config_json(const PipelineConfig& config);

// A stage was invoked before the stage producing its inputs.
class MissingUpstreamError : public std::runtime_error {
public:
    MissingUpstreamError(Stage required, const std::string& artifact)
        : std::runtime_error("missing upstream artifact '" + artifact + "': run the '" +
                             std::string(stage_name(required)) + "' stage first"),
          required_stage(required) {}
    Stage required_stage;
};

// Runs one stage: reads upstream artifacts from the output directory, writes
// its own artifacts (each paired with a .meta.json provenance record), and
// is idempotent for unchanged inputs. Returns the files written.
std::vector<std::string> run_stage(Stage stage, const PipelineConfig& config);

}  // namespace satkit
