#include "satkit/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include <json.hpp>

#include "satkit/cluster.hpp"
#include "satkit/corpus.hpp"
#include "satkit/csv.hpp"
#include "satkit/forest.hpp"
#include "satkit/hash.hpp"
#include "satkit/lda.hpp"
#include "satkit/linreg.hpp"
#include "satkit/panel.hpp"
#include "satkit/parallel.hpp"
#include "satkit/rng.hpp"
#include "satkit/selection.hpp"
#include "satkit/topic_graph.hpp"
#include "satkit/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace satkit {

std::string_view stage_name(Stage s) {
    switch (s) {
        case Stage::ingest: return "ingest";
        case Stage::sweep: return "sweep";
        case Stage::fit: return "fit";
        case Stage::graph: return "graph";
        case Stage::link: return "link";
        case Stage::panel: return "panel";
        case Stage::cluster: return "cluster";
        case Stage::report: return "report";
    }
    return "?";
}

std::optional<Stage> stage_from_name(std::string_view name) {
    for (Stage s : {Stage::ingest, Stage::sweep, Stage::fit, Stage::graph, Stage::link,
                    Stage::panel, Stage::cluster, Stage::report}) {
        if (stage_name(s) == name) return s;
    }
    return std::nullopt;
}

namespace {

template <typename T>
void get_to_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace

PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j = json::parse(in);

    PipelineConfig c;
    if (j.contains("inputs")) {
        const auto& i = j.at("inputs");
        get_to_if(i, "reviews", c.inputs.reviews);
        get_to_if(i, "register", c.inputs.register_table);
        get_to_if(i, "imd", c.inputs.imd);
        get_to_if(i, "ccg", c.inputs.ccg);
    }
    get_to_if(j, "output_dir", c.output_dir);
    get_to_if(j, "seed", c.seed);
    get_to_if(j, "threads", c.threads);
    if (j.contains("preprocess")) {
        const auto& p = j.at("preprocess");
        get_to_if(p, "min_token_len", c.preprocess.min_token_len);
        get_to_if(p, "min_count", c.preprocess.min_count);
        get_to_if(p, "max_count", c.preprocess.max_count);
        get_to_if(p, "stemmer", c.preprocess.stemmer);
        get_to_if(p, "stopwords_file", c.preprocess.stopwords_file);
    }
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        get_to_if(s, "k_min", c.sweep.k_min);
        get_to_if(s, "k_max", c.sweep.k_max);
        get_to_if(s, "step", c.sweep.step);
        get_to_if(s, "iterations", c.sweep.iterations);
        get_to_if(s, "burn_in", c.sweep.burn_in);
        get_to_if(s, "top_words", c.sweep.top_words);
        get_to_if(s, "frex_weight", c.sweep.frex_weight);
    }
    if (j.contains("lda")) {
        const auto& l = j.at("lda");
        get_to_if(l, "k", c.lda.k);
        if (l.contains("alpha") && !l.at("alpha").is_null()) c.lda.alpha = l.at("alpha").get<double>();
        get_to_if(l, "beta", c.lda.beta);
        get_to_if(l, "iterations", c.lda.iterations);
        get_to_if(l, "burn_in", c.lda.burn_in);
        get_to_if(l, "sample_lag", c.lda.sample_lag);
    }
    if (j.contains("graph")) {
        const auto& g = j.at("graph");
        get_to_if(g, "edge_quantile", c.graph.edge_quantile);
        get_to_if(g, "resolution", c.graph.resolution);
        get_to_if(g, "polarity_band", c.graph.polarity_band);
    }
    if (j.contains("forest")) {
        const auto& f = j.at("forest");
        get_to_if(f, "trees", c.forest.trees);
        get_to_if(f, "mtry", c.forest.mtry);
        get_to_if(f, "min_node", c.forest.min_node);
        get_to_if(f, "mode", c.forest.mode);
    }
    if (j.contains("linreg")) {
        get_to_if(j.at("linreg"), "folds", c.linreg.folds);
    }
    if (j.contains("panel")) {
        get_to_if(j.at("panel"), "robust", c.panel.robust);
    }
    if (j.contains("cluster")) {
        const auto& k = j.at("cluster");
        get_to_if(k, "k", c.cluster.k);
        get_to_if(k, "restarts", c.cluster.restarts);
        get_to_if(k, "max_iters", c.cluster.max_iters);
        get_to_if(k, "top_terms", c.cluster.top_terms);
    }
    return c;
}

std::string canonical_config_json(const PipelineConfig& c) {
    json j;
    j["inputs"] = {{"reviews", c.inputs.reviews},
                   {"register", c.inputs.register_table},
                   {"imd", c.inputs.imd},
                   {"ccg", c.inputs.ccg}};
    j["seed"] = c.seed;
    j["preprocess"] = {{"min_token_len", c.preprocess.min_token_len},
                       {"min_count", c.preprocess.min_count},
                       {"max_count", c.preprocess.max_count},
                       {"stemmer", c.preprocess.stemmer},
                       {"stopwords_file", c.preprocess.stopwords_file}};
    j["sweep"] = {{"k_min", c.sweep.k_min},       {"k_max", c.sweep.k_max},
                  {"step", c.sweep.step},         {"iterations", c.sweep.iterations},
                  {"burn_in", c.sweep.burn_in},   {"top_words", c.sweep.top_words},
                  {"frex_weight", c.sweep.frex_weight}};
    j["lda"] = {{"k", c.lda.k},
                {"alpha", c.lda.alpha ? json(*c.lda.alpha) : json(nullptr)},
                {"beta", c.lda.beta},
                {"iterations", c.lda.iterations},
                {"burn_in", c.lda.burn_in},
                {"sample_lag", c.lda.sample_lag}};
    j["graph"] = {{"edge_quantile", c.graph.edge_quantile},
                  {"resolution", c.graph.resolution},
                  {"polarity_band", c.graph.polarity_band}};
    j["forest"] = {{"trees", c.forest.trees},
                   {"mtry", c.forest.mtry},
                   {"min_node", c.forest.min_node},
                   {"mode", c.forest.mode}};
    j["linreg"] = {{"folds", c.linreg.folds}};
    j["panel"] = {{"robust", c.panel.robust}};
    j["cluster"] = {{"k", c.cluster.k},
                    {"restarts", c.cluster.restarts},
                    {"max_iters", c.cluster.max_iters},
                    {"top_terms", c.cluster.top_terms}};
    return j.dump();
}

namespace {

Stage producer_of(const std::string& rel) {
    const auto slash = rel.find('/');
    const auto s = stage_from_name(rel.substr(0, slash));
    if (!s) throw std::logic_error("no stage produces " + rel);
    return *s;
}

// Shared façade for one stage run: upstream reads are hashed into the
// provenance record, outputs are paired with .meta.json files.
struct StageIo {
    const PipelineConfig& config;
    Stage stage;
    fs::path out_root;
    std::string config_hash;
    json upstream = json::object();
    std::vector<std::string> written;

    StageIo(const PipelineConfig& cfg, Stage s)
        : config(cfg), stage(s), out_root(cfg.output_dir) {
        config_hash = hex64(fnv1a64(canonical_config_json(cfg)));
    }

    std::string upstream_path(const std::string& rel) {
        const fs::path p = out_root / rel;
        if (!fs::exists(p)) throw MissingUpstreamError(producer_of(rel), rel);
        record(p.string());
        return p.string();
    }

    // External input files (reviews CSV etc.) are recorded the same way.
    std::string input_path(const std::string& path, const std::string& what) {
        if (path.empty() || !fs::exists(path)) {
            throw std::runtime_error("input file for '" + what + "' not found: '" + path + "'");
        }
        record(path);
        return path;
    }

    void record(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        upstream[path] = hex64(fnv1a64(buf.str()));
    }

    void write(const std::string& rel, const std::string& content) {
        const fs::path p = out_root / rel;
        fs::create_directories(p.parent_path());
        {
            std::ofstream out(p, std::ios::binary | std::ios::trunc);
            if (!out) throw std::runtime_error("cannot write " + p.string());
            out << content;
        }
        json meta;
        meta["artifact"] = rel;
        meta["artifact_version"] = kVersion;
        meta["stage"] = std::string(stage_name(stage));
        meta["base_seed"] = config.seed;
        meta["config_hash"] = config_hash;
        meta["upstream"] = upstream;
        std::ofstream mout(p.string() + ".meta.json", std::ios::binary | std::ios::trunc);
        mout << meta.dump(2) << "\n";
        written.push_back(rel);
    }
};

std::string review_row_month(const ReviewRecord& r) { return r.posted_month; }

std::string reviews_to_csv(const std::vector<ReviewRecord>& reviews) {
    std::ostringstream out;
    CsvWriter w(out);
    w.row({"review_id", "practice_id", "posted_date", "text", "r_phone", "r_appt", "r_dignity",
           "r_involved", "r_recommend", "r_info"});
    for (const auto& r : reviews) {
        std::vector<std::string> row = {r.review_id, r.practice_id, review_row_month(r), r.text};
        for (const auto& rating : r.ratings) {
            row.push_back(rating ? std::to_string(*rating) : "");
        }
        w.row(row);
    }
    return out.str();
}

std::string enriched_to_csv(const std::vector<EnrichedReview>& reviews) {
    std::ostringstream out;
    CsvWriter w(out);
    w.row({"review_id", "practice_id", "posted_date", "ccg_id", "imd_weighted",
           "patients_registered", "r_phone", "r_appt", "r_dignity", "r_involved", "r_recommend",
           "r_info"});
    for (const auto& r : reviews) {
        std::vector<std::string> row = {r.review_id,  r.practice_id,
                                        r.posted_month, r.ccg_id,
                                        format_double(r.imd_weighted), std::to_string(r.patients_registered)};
        for (const auto& rating : r.ratings) {
            row.push_back(rating ? std::to_string(*rating) : "");
        }
        w.row(row);
    }
    return out.str();
}

std::vector<EnrichedReview> enriched_from_csv(const std::string& path) {
    CsvReader reader(path);
    const std::size_t c_id = reader.column("review_id");
    const std::size_t c_practice = reader.column("practice_id");
    const std::size_t c_date = reader.column("posted_date");
    const std::size_t c_ccg = reader.column("ccg_id");
    const std::size_t c_imd = reader.column("imd_weighted");
    const std::size_t c_pat = reader.column("patients_registered");
    std::array<std::size_t, kNumRatings> c_ratings{};
    for (std::size_t q = 0; q < kNumRatings; ++q) {
        c_ratings[q] = reader.column(std::string(kRatingKeys[q]));
    }
    std::vector<EnrichedReview> out;
    std::vector<std::string> row;
    while (reader.next(row)) {
        EnrichedReview r;
        r.review_id = row[c_id];
        r.practice_id = row[c_practice];
        r.posted_month = row[c_date];
        r.ccg_id = row[c_ccg];
        r.imd_weighted = std::stod(row[c_imd]);
        r.patients_registered = std::stoll(row[c_pat]);
        for (std::size_t q = 0; q < kNumRatings; ++q) {
            if (!row[c_ratings[q]].empty()) r.ratings[q] = std::stoi(row[c_ratings[q]]);
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::string vocabulary_to_csv(const Vocabulary& vocab) {
    std::ostringstream out;
    CsvWriter w(out);
    w.row({"index", "term", "count"});
    for (int v = 0; v < vocab.size(); ++v) {
        w.row({std::to_string(v), vocab.terms[static_cast<std::size_t>(v)],
               std::to_string(vocab.corpus_counts[static_cast<std::size_t>(v)])});
    }
    return out.str();
}

Vocabulary vocabulary_from_csv(const std::string& path) {
    CsvReader reader(path);
    const std::size_t c_i = reader.column("index");
    const std::size_t c_t = reader.column("term");
    const std::size_t c_c = reader.column("count");
    Vocabulary vocab;
    std::vector<std::string> row;
    while (reader.next(row)) {
        const int idx = std::stoi(row[c_i]);
        if (idx != vocab.size()) throw std::runtime_error("vocabulary.csv: non-dense indices");
        vocab.index.emplace(row[c_t], idx);
        vocab.terms.push_back(row[c_t]);
        vocab.corpus_counts.push_back(std::stoll(row[c_c]));
    }
    return vocab;
}

std::string corpus_to_csv(const BagCorpus& corpus) {
    std::ostringstream out;
    CsvWriter w(out);
    w.row({"doc", "term", "count"});
    for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
        for (const auto& e : corpus.docs[d]) {
            w.row({std::to_string(d), std::to_string(e.term), std::to_string(e.count)});
        }
    }
    return out.str();
}

BagCorpus corpus_from_csv(const std::string& path, const std::vector<ReviewRecord>& reviews,
                          int vocab_size) {
    CsvReader reader(path);
    const std::size_t c_d = reader.column("doc");
    const std::size_t c_t = reader.column("term");
    const std::size_t c_c = reader.column("count");
    BagCorpus corpus;
    corpus.docs.resize(reviews.size());
    corpus.vocab_size = vocab_size;
    for (const auto& r : reviews) corpus.doc_ids.push_back(r.review_id);
    std::vector<std::string> row;
    while (reader.next(row)) {
        const std::size_t d = static_cast<std::size_t>(std::stoull(row[c_d]));
        const BagEntry e{std::stoi(row[c_t]), std::stoi(row[c_c])};
        corpus.docs.at(d).push_back(e);
        corpus.total_tokens += e.count;
    }
    return corpus;
}

std::string matrix_to_csv(const std::vector<double>& m, std::size_t rows, std::size_t cols,
                          const std::string& row_header, const std::vector<std::string>& col_names,
                          const std::vector<std::string>& row_names) {
    std::ostringstream out;
    CsvWriter w(out);
    std::vector<std::string> header = {row_header};
    header.insert(header.end(), col_names.begin(), col_names.end());
    w.row(header);
    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<std::string> row = {row_names[r]};
        for (std::size_t c = 0; c < cols; ++c) row.push_back(format_double(m[r * cols + c]));
        w.row(row);
    }
    return out.str();
}

std::vector<double> matrix_from_csv(const std::string& path, std::size_t& rows, std::size_t& cols) {
    CsvReader reader(path);
    cols = reader.header().size() - 1;
    std::vector<double> m;
    std::vector<std::string> row;
    rows = 0;
    while (reader.next(row)) {
        for (std::size_t c = 1; c < row.size(); ++c) m.push_back(std::stod(row[c]));
        ++rows;
    }
    return m;
}

std::vector<std::string> topic_names(int k) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) names.push_back("topic" + std::to_string(i + 1));
    return names;
}

StemmerKind stemmer_from_string(const std::string& s) {
    if (s == "porter") return StemmerKind::porter;
    if (s == "none") return StemmerKind::none;
    throw std::runtime_error("unknown stemmer '" + s + "' (expected porter or none)");
}

// ---------------------------------------------------------------- ingest --

void stage_ingest(StageIo& io) {
    const auto& cfg = io.config;
    const std::string reviews_path = io.input_path(cfg.inputs.reviews, "reviews");

    auto loaded = load_reviews(reviews_path);

    PreprocessConfig pre;
    pre.min_token_len = cfg.preprocess.min_token_len;
    pre.min_corpus_count = cfg.preprocess.min_count;
    pre.max_corpus_count = cfg.preprocess.max_count;
    pre.stemmer = stemmer_from_string(cfg.preprocess.stemmer);
    pre.threads = cfg.threads;
    if (!cfg.preprocess.stopwords_file.empty()) {
        std::ifstream in(io.input_path(cfg.preprocess.stopwords_file, "stopwords"));
        std::string word;
        while (in >> word) pre.stopwords.insert(word);
    }
    auto prep = preprocess(loaded.reviews, pre);

    json reports;
    reports["load"] = {{"rows_read", loaded.report.rows_read},
                       {"accepted", loaded.report.accepted},
                       {"rejected", loaded.report.rejected}};
    json rejections = json::array();
    for (const auto& [line, reason] : loaded.report.rejections) {
        rejections.push_back({{"row", line}, {"reason", reason}});
    }
    reports["load"]["rejections"] = rejections;
    reports["prune"] = {{"removed_terms", prep.report.removed_term_count},
                        {"removed_occurrences", prep.report.removed_occurrence_count},
                        {"retained_terms", prep.report.retained_term_count},
                        {"retained_occurrences", prep.report.retained_occurrence_count}};
    reports["empty_documents"] = prep.corpus.empty_docs().size();

    // Metadata joins (optional: panel needs them, the text pipeline does not).
    if (!cfg.inputs.register_table.empty()) {
        const auto reg = load_register_table(io.input_path(cfg.inputs.register_table, "register"));
        const auto imd = load_imd_table(io.input_path(cfg.inputs.imd, "imd"));
        const auto ccg = load_ccg_table(io.input_path(cfg.inputs.ccg, "ccg"));
        auto enriched = enrich_reviews(loaded.reviews, reg, imd, ccg);
        io.write("ingest/enriched.csv", enriched_to_csv(enriched.reviews));
        json drop = {{"retained", enriched.report.retained}, {"dropped", enriched.report.dropped}};
        json reasons = json::object();
        for (const auto& [reason, count] : enriched.report.reasons) reasons[reason] = count;
        drop["reasons"] = reasons;
        reports["enrich"] = drop;
    }

    io.write("ingest/reviews.csv", reviews_to_csv(loaded.reviews));
    io.write("ingest/vocabulary.csv", vocabulary_to_csv(prep.vocabulary));
    io.write("ingest/corpus.csv", corpus_to_csv(prep.corpus));
    io.write("ingest/reports.json", reports.dump(2) + "\n");
}

struct CorpusArtifacts {
    std::vector<ReviewRecord> reviews;
    Vocabulary vocabulary;
    BagCorpus corpus;
};

CorpusArtifacts load_corpus_artifacts(StageIo& io) {
    CorpusArtifacts a;
    a.reviews = load_reviews(io.upstream_path("ingest/reviews.csv")).reviews;
    a.vocabulary = vocabulary_from_csv(io.upstream_path("ingest/vocabulary.csv"));
    a.corpus = corpus_from_csv(io.upstream_path("ingest/corpus.csv"), a.reviews, a.vocabulary.size());
    return a;
}

// ----------------------------------------------------------------- sweep --

void stage_sweep(StageIo& io) {
    const auto& cfg = io.config;
    auto art = load_corpus_artifacts(io);

    SweepConfig sc;
    sc.k_min = cfg.sweep.k_min;
    sc.k_max = cfg.sweep.k_max;
    sc.step = cfg.sweep.step;
    sc.top_words = cfg.sweep.top_words;
    sc.frex_weight = cfg.sweep.frex_weight;
    sc.hyper.beta = cfg.lda.beta;
    sc.hyper.alpha = cfg.lda.alpha;
    sc.hyper.iterations = cfg.sweep.iterations;
    sc.hyper.burn_in = cfg.sweep.burn_in;
    sc.hyper.seed = cfg.seed;
    sc.threads = cfg.threads;

    const SweepTable table = sweep(art.corpus, sc);

    std::ostringstream out;
    CsvWriter w(out);
    w.row({"k", "coherence_raw", "exclusivity_raw", "coherence_norm", "exclusivity_norm"});
    for (const auto& e : table.entries) {
        w.row({std::to_string(e.k), format_double(e.coherence_raw), format_double(e.exclusivity_raw),
               format_double(e.coherence_norm), format_double(e.exclusivity_norm)});
    }
    io.write("sweep/sweep.csv", out.str());

    const auto rationale = select_k(table);
    json sel;
    sel["chosen_k"] = rationale.chosen_k;
    sel["chosen"] = {{"coherence_norm", rationale.chosen_coherence_norm},
                     {"exclusivity_norm", rationale.chosen_exclusivity_norm}};
    sel["runner_up_k"] = rationale.runner_up_k;
    sel["runner_up"] = {{"coherence_norm", rationale.runner_up_coherence_norm},
                        {"exclusivity_norm", rationale.runner_up_exclusivity_norm}};
    sel["summary"] = rationale.summary;
    sel["top_words"] = cfg.sweep.top_words;
    sel["frex_weight"] = cfg.sweep.frex_weight;
    json failures = json::array();
    for (const auto& [k, err] : table.failures) failures.push_back({{"k", k}, {"error", err}});
    sel["failures"] = failures;
    io.write("sweep/selection.json", sel.dump(2) + "\n");
}

// ------------------------------------------------------------------- fit --

void stage_fit(StageIo& io) {
    const auto& cfg = io.config;
    auto art = load_corpus_artifacts(io);

    int k = cfg.lda.k;
    if (k <= 0) {
        std::ifstream in(io.upstream_path("sweep/selection.json"));
        json sel = json::parse(in);
        k = sel.at("chosen_k").get<int>();
    }

    LdaHyperparams hyper;
    hyper.alpha = cfg.lda.alpha;
    hyper.beta = cfg.lda.beta;
    hyper.iterations = cfg.lda.iterations;
    hyper.burn_in = cfg.lda.burn_in;
    hyper.sample_lag = cfg.lda.sample_lag;
    hyper.seed = cfg.seed;

    LdaModel model = fit_lda(art.corpus, k, hyper);
    model.vocab_fingerprint = art.vocabulary.fingerprint();

    json meta;
    meta["k"] = model.num_topics;
    meta["alpha"] = model.alpha;
    meta["beta"] = model.beta;
    meta["iterations"] = hyper.iterations;
    meta["burn_in"] = hyper.burn_in;
    meta["sample_lag"] = hyper.sample_lag;
    meta["seed"] = hyper.seed;
    meta["vocabulary_hash"] = hex64(model.vocab_fingerprint);
    meta["num_docs"] = model.num_docs;
    meta["vocab_size"] = model.vocab_size;
    meta["per_token_log_likelihood"] = log_likelihood(model, art.corpus);
    io.write("fit/model.json", meta.dump(2) + "\n");

    std::vector<std::string> doc_names;
    doc_names.reserve(static_cast<std::size_t>(model.num_docs));
    for (int d = 0; d < model.num_docs; ++d) doc_names.push_back(std::to_string(d));
    io.write("fit/phi.csv",
             matrix_to_csv(model.topic_word, static_cast<std::size_t>(model.num_topics),
                           static_cast<std::size_t>(model.vocab_size), "topic",
                           art.vocabulary.terms, topic_names(model.num_topics)));
    io.write("fit/theta.csv",
             matrix_to_csv(model.doc_topic, static_cast<std::size_t>(model.num_docs),
                           static_cast<std::size_t>(model.num_topics), "doc",
                           topic_names(model.num_topics), doc_names));
}

LdaModel load_model_artifacts(StageIo& io, const CorpusArtifacts& art) {
    std::ifstream in(io.upstream_path("fit/model.json"));
    json meta = json::parse(in);
    LdaModel model;
    model.num_topics = meta.at("k").get<int>();
    model.alpha = meta.at("alpha").get<double>();
    model.beta = meta.at("beta").get<double>();
    model.vocab_fingerprint = art.vocabulary.fingerprint();
    if (meta.at("vocabulary_hash").get<std::string>() != hex64(model.vocab_fingerprint)) {
        throw std::runtime_error("fit/model.json: vocabulary hash mismatch, re-run ingest + fit");
    }
    std::size_t rows = 0, cols = 0;
    model.topic_word = matrix_from_csv(io.upstream_path("fit/phi.csv"), rows, cols);
    model.vocab_size = static_cast<int>(cols);
    model.doc_topic = matrix_from_csv(io.upstream_path("fit/theta.csv"), rows, cols);
    model.num_docs = static_cast<int>(rows);
    return model;
}

// ----------------------------------------------------------------- graph --

void stage_graph(StageIo& io) {
    const auto& cfg = io.config;
    auto art = load_corpus_artifacts(io);
    const LdaModel model = load_model_artifacts(io, art);

    const auto prev = prevalence(model, art.corpus);
    const auto sim = similarity_matrix(model, cfg.threads);
    TopicGraph graph = build_graph(sim, model.num_topics, prev, cfg.graph.edge_quantile);

    // Readable labels: topic number plus its three strongest stems.
    for (auto& node : graph.nodes) {
        const auto words = top_words(model, node.topic, 3);
        std::string label = "topic" + std::to_string(node.topic + 1) + ":";
        for (const auto& [term, p] : words) {
            (void)p;
            label += " " + art.vocabulary.terms[static_cast<std::size_t>(term)];
        }
        node.label = label;
    }

    const CommunityPartition partition = louvain(graph, cfg.graph.resolution, cfg.seed);

    std::vector<std::optional<double>> mean_ratings;
    mean_ratings.reserve(art.reviews.size());
    for (const auto& r : art.reviews) mean_ratings.push_back(r.mean_rating());
    const PolarityResult polarity =
        assign_polarity(partition, model, mean_ratings, cfg.graph.polarity_band);
    annotate_graph(graph, partition, polarity);

    std::ostringstream nodes, edges, graphml, dot, pol;
    write_nodes_csv(graph, nodes);
    write_edges_csv(graph, edges);
    write_graphml(graph, graphml);
    write_dot(graph, dot);
    CsvWriter pw(pol);
    pw.row({"topic", "correlation", "community", "polarity"});
    for (int k = 0; k < model.num_topics; ++k) {
        pw.row({std::to_string(k), format_double(polarity.topic_correlation[static_cast<std::size_t>(k)]),
                std::to_string(partition.community[static_cast<std::size_t>(k)]),
                std::string(polarity_name(polarity.topic_polarity[static_cast<std::size_t>(k)]))});
    }

    io.write("graph/nodes.csv", nodes.str());
    io.write("graph/edges.csv", edges.str());
    io.write("graph/graph.graphml", graphml.str());
    io.write("graph/graph.dot", dot.str());
    io.write("graph/polarity.csv", pol.str());

    json summary;
    summary["modularity"] = partition.modularity;
    summary["num_communities"] = partition.num_communities;
    summary["edge_quantile"] = cfg.graph.edge_quantile;
    summary["resolution"] = cfg.graph.resolution;
    io.write("graph/communities.json", summary.dump(2) + "\n");
}

std::vector<Polarity> load_polarity(StageIo& io, int expected_topics) {
    CsvReader reader(io.upstream_path("graph/polarity.csv"));
    const std::size_t c_t = reader.column("topic");
    const std::size_t c_p = reader.column("polarity");
    std::vector<Polarity> out(static_cast<std::size_t>(expected_topics), Polarity::neutral);
    std::vector<std::string> row;
    std::size_t seen = 0;
    while (reader.next(row)) {
        const int topic = std::stoi(row[c_t]);
        const auto p = polarity_from_name(row[c_p]);
        if (!p || topic < 0 || topic >= expected_topics) {
            throw std::runtime_error("graph/polarity.csv: bad row");
        }
        out[static_cast<std::size_t>(topic)] = *p;
        ++seen;
    }
    if (seen != static_cast<std::size_t>(expected_topics)) {
        throw std::runtime_error("graph/polarity.csv: polarity map incomplete");
    }
    return out;
}

// ------------------------------------------------------------------ link --

void stage_link(StageIo& io) {
    const auto& cfg = io.config;
    auto art = load_corpus_artifacts(io);
    const LdaModel model = load_model_artifacts(io, art);
    const std::size_t p = static_cast<std::size_t>(model.num_topics);

    std::ostringstream imp_csv, cv_csv, rank_csv;
    CsvWriter imp(imp_csv);
    imp.row({"dimension", "feature", "label", "importance", "rank"});
    json metrics_json;

    // Per-dimension design matrices from the documents that rated it. The
    // forest sees all topic proportions; the linear models drop the last
    // topic as a baseline because proportions sum to 1 and the full simplex
    // is collinear with an intercept.
    const std::size_t p_lin = p - 1;
    struct DimData {
        std::vector<double> x;      // n x p
        std::vector<double> x_lin;  // n x (p - 1)
        std::vector<int> y;
        std::vector<double> yd;
        std::size_t n = 0;
    };
    std::vector<DimData> dims(kNumRatings);
    for (std::size_t q = 0; q < kNumRatings; ++q) {
        for (std::size_t d = 0; d < art.reviews.size(); ++d) {
            const auto& rating = art.reviews[d].ratings[q];
            if (!rating) continue;
            auto& dd = dims[q];
            for (std::size_t j = 0; j < p; ++j) {
                const double v = model.doc_topic_at(static_cast<int>(d), static_cast<int>(j));
                dd.x.push_back(v);
                if (j < p_lin) dd.x_lin.push_back(v);
            }
            dd.y.push_back(*rating);
            dd.yd.push_back(static_cast<double>(*rating));
            ++dd.n;
        }
    }

    std::array<CvReport, kNumRatings> cv_ols, cv_lasso;
    std::array<LinearFit, kNumRatings> lasso_fits;
    std::array<Metrics, kNumRatings> dim_metrics;
    std::array<double, kNumRatings> oob_accuracy{};

    for (std::size_t q = 0; q < kNumRatings; ++q) {
        const auto& dd = dims[q];
        const std::string key(kRatingKeys[q]);
        if (dd.n < 10) {
            metrics_json[key] = {{"error", "too few rated reviews"}};
            continue;
        }

        ForestConfig fc;
        fc.n_trees = cfg.forest.trees;
        fc.mtry = cfg.forest.mtry;
        fc.min_node = cfg.forest.min_node;
        fc.mode = cfg.forest.mode == "regression" ? ForestMode::regression
                                                  : ForestMode::classification;
        fc.seed = derive_seed(cfg.seed, 100 + q);
        fc.threads = cfg.threads;
        const ForestModel forest = fit_forest(dd.x, dd.n, p, dd.y, fc);

        std::vector<int> oob_pred, oob_truth;
        for (std::size_t i = 0; i < dd.n; ++i) {
            if (forest.oob_prediction[i]) {
                oob_pred.push_back(*forest.oob_prediction[i]);
                oob_truth.push_back(dd.y[i]);
            }
        }
        const ConfusionMatrix cm = confusion(oob_pred, oob_truth);
        const Metrics m = metrics(cm);
        dim_metrics[q] = m;
        oob_accuracy[q] = m.accuracy;

        std::ostringstream cm_csv;
        CsvWriter cw(cm_csv);
        cw.row({"pred\\true", "1", "2", "3", "4", "5", "total"});
        for (int r = 0; r < kNumStars; ++r) {
            std::vector<std::string> row = {std::to_string(r + 1)};
            for (int c = 0; c < kNumStars; ++c) {
                row.push_back(std::to_string(cm.counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]));
            }
            row.push_back(std::to_string(cm.row_sum(r)));
            cw.row(row);
        }
        std::vector<std::string> margin = {"total"};
        for (int c = 0; c < kNumStars; ++c) margin.push_back(std::to_string(cm.col_sum(c)));
        margin.push_back(std::to_string(cm.total()));
        cw.row(margin);
        io.write("link/confusion_" + key + ".csv", cm_csv.str());

        json mj;
        mj["accuracy"] = m.accuracy;
        mj["oob_rows"] = oob_pred.size();
        for (int c = 0; c < kNumStars; ++c) {
            const auto& cls = m.per_class[static_cast<std::size_t>(c)];
            mj["per_class"][std::to_string(c + 1)] = {{"precision", cls.precision},
                                                      {"recall", cls.recall},
                                                      {"f1", cls.f1},
                                                      {"zero_margin", cls.zero_margin}};
        }
        mj["macro"] = {{"precision", m.macro_precision},
                       {"recall", m.macro_recall},
                       {"f1", m.macro_f1}};
        metrics_json[key] = mj;

        for (const auto& fi : importance_ranking(forest)) {
            imp.row({key, std::to_string(fi.feature), "topic" + std::to_string(fi.feature + 1),
                     format_double(fi.importance), std::to_string(fi.rank)});
        }

        cv_ols[q] = cv_error(dd.x_lin, dd.n, p_lin, dd.yd, CvEstimator::ols, cfg.linreg.folds,
                             derive_seed(cfg.seed, 300 + q), cfg.threads);
        cv_lasso[q] = cv_error(dd.x_lin, dd.n, p_lin, dd.yd, CvEstimator::lasso, cfg.linreg.folds,
                               derive_seed(cfg.seed, 400 + q), cfg.threads);
        const double lambda =
            choose_lasso_lambda(dd.x_lin, dd.n, p_lin, dd.yd, derive_seed(cfg.seed, 500 + q));
        lasso_fits[q] = lasso(dd.x_lin, dd.n, p_lin, dd.yd, lambda);
    }

    CsvWriter cvw(cv_csv);
    {
        std::vector<std::string> header = {"estimator"};
        for (const auto& k : kRatingKeys) header.emplace_back(k);
        header.push_back("mean");
        cvw.row(header);
        auto emit = [&](const std::string& name, const std::array<CvReport, kNumRatings>& reports) {
            std::vector<std::string> row = {name};
            double mean = 0.0;
            for (const auto& r : reports) {
                row.push_back(format_double(r.mean_rmse));
                mean += r.mean_rmse;
            }
            row.push_back(format_double(mean / kNumRatings));
            cvw.row(row);
        };
        emit("ols", cv_ols);
        emit("lasso", cv_lasso);
        std::vector<std::string> base = {"baseline_sd"};
        double mean_sd = 0.0;
        for (const auto& r : cv_ols) {
            base.push_back(format_double(r.baseline_sd));
            mean_sd += r.baseline_sd;
        }
        base.push_back(format_double(mean_sd / kNumRatings));
        cvw.row(base);
    }

    CsvWriter rw(rank_csv);
    {
        std::vector<std::string> header = {"feature", "label"};
        for (const auto& k : kRatingKeys) {
            header.push_back("coef_" + std::string(k));
            header.push_back("rank_" + std::string(k));
        }
        rw.row(header);
        std::vector<std::vector<RankedPredictor>> ranked(kNumRatings);
        for (std::size_t q = 0; q < kNumRatings; ++q) {
            if (dims[q].n >= 10) {
                auto r = rank_predictors(lasso_fits[q]);
                ranked[q].resize(p_lin);
                for (const auto& rp : r) ranked[q][static_cast<std::size_t>(rp.feature)] = rp;
            }
        }
        for (std::size_t j = 0; j < p; ++j) {
            std::vector<std::string> row = {std::to_string(j), "topic" + std::to_string(j + 1)};
            for (std::size_t q = 0; q < kNumRatings; ++q) {
                if (j >= p_lin) {
                    // Baseline topic dropped from the linear design.
                    row.push_back("baseline");
                    row.push_back("");
                } else if (ranked[q].empty() || !ranked[q][j].selected) {
                    row.push_back(ranked[q].empty() ? "" : format_double(ranked[q][j].coef));
                    row.push_back("");
                } else {
                    row.push_back(format_double(ranked[q][j].coef));
                    row.push_back(std::to_string(ranked[q][j].rank));
                }
            }
            rw.row(row);
        }
    }

    io.write("link/importance.csv", imp_csv.str());
    io.write("link/metrics.json", metrics_json.dump(2) + "\n");
    io.write("link/cv_table.csv", cv_csv.str());
    io.write("link/coef_ranking.csv", rank_csv.str());
}

// ----------------------------------------------------------------- panel --

void stage_panel(StageIo& io) {
    const auto& cfg = io.config;
    auto art = load_corpus_artifacts(io);
    const LdaModel model = load_model_artifacts(io, art);
    const auto polarity = load_polarity(io, model.num_topics);
    const auto enriched = enriched_from_csv(io.upstream_path("ingest/enriched.csv"));

    std::unordered_map<std::string, int> doc_of_review;
    for (std::size_t d = 0; d < art.corpus.doc_ids.size(); ++d) {
        doc_of_review.emplace(art.corpus.doc_ids[d], static_cast<int>(d));
    }
    std::vector<int> doc_index;
    doc_index.reserve(enriched.size());
    for (const auto& r : enriched) {
        const auto it = doc_of_review.find(r.review_id);
        if (it == doc_of_review.end()) {
            throw std::runtime_error("panel: enriched review " + r.review_id + " missing from corpus");
        }
        doc_index.push_back(it->second);
    }

    const PanelTable table = aggregate_panel(enriched, model, doc_index, polarity);

    std::ostringstream panel_csv;
    CsvWriter w(panel_csv);
    {
        std::vector<std::string> header = {"ccg_id", "month", "n_reviews"};
        for (const auto& k : kRatingKeys) header.push_back("mean_" + std::string(k));
        header.insert(header.end(), {"mean_positive", "mean_negative", "mean_neutral", "mean_imd",
                                     "mean_patients"});
        w.row(header);
        for (const auto& cell : table.cells) {
            std::vector<std::string> row = {cell.ccg_id, cell.month, std::to_string(cell.n_reviews)};
            for (const auto& mr : cell.mean_ratings) {
                row.push_back(mr ? format_double(*mr) : "");
            }
            row.push_back(format_double(cell.mean_positive));
            row.push_back(format_double(cell.mean_negative));
            row.push_back(format_double(cell.mean_neutral));
            row.push_back(format_double(cell.mean_imd));
            row.push_back(format_double(cell.mean_patients));
            w.row(row);
        }
    }
    io.write("panel/panel.csv", panel_csv.str());

    FeOptions fe_opt;
    fe_opt.robust = cfg.panel.robust == "cluster_ccg" ? RobustSe::cluster_ccg : RobustSe::hc1;

    json results_json;
    std::vector<FeResult> results;
    for (int q = 0; q < static_cast<int>(kNumRatings); ++q) {
        const std::string key(kRatingKeys[static_cast<std::size_t>(q)]);
        try {
            FeResult r = fit_two_way_fe(table, q, fe_opt);
            json terms = json::array();
            for (const auto& t : r.terms) {
                terms.push_back({{"name", t.name},
                                 {"coef", t.coef},
                                 {"se", t.se},
                                 {"t", t.t_stat},
                                 {"p", t.p_value},
                                 {"stars", t.stars}});
            }
            results_json[key] = {{"terms", terms},
                                 {"r2_overall", r.r2_overall},
                                 {"r2_within", r.r2_within},
                                 {"adj_r2", r.adj_r2},
                                 {"n_obs", r.n_obs},
                                 {"n_ccg", r.n_ccg},
                                 {"n_month", r.n_month},
                                 {"singletons_dropped", r.singletons_dropped}};
            results.push_back(std::move(r));
        } catch (const std::exception& e) {
            results_json[key] = {{"error", e.what()}};
        }
    }
    io.write("panel/fe_results.json", results_json.dump(2) + "\n");
    io.write("panel/fe_table.txt", format_fe_table(results));
}

// --------------------------------------------------------------- cluster --

void stage_cluster(StageIo& io) {
    const auto& cfg = io.config;
    auto art = load_corpus_artifacts(io);
    const LdaModel model = load_model_artifacts(io, art);
    const auto polarity = load_polarity(io, model.num_topics);

    const std::size_t n = static_cast<std::size_t>(model.num_docs);
    const std::size_t dim = static_cast<std::size_t>(model.num_topics);

    KmeansConfig kc;
    kc.k = cfg.cluster.k;
    kc.restarts = cfg.cluster.restarts;
    kc.max_iters = cfg.cluster.max_iters;
    kc.seed = derive_seed(cfg.seed, 900);
    kc.threads = cfg.threads;
    const ClusterModel clusters = kmeans(model.doc_topic, n, dim, kc);

    const auto labels = tfidf_labels(clusters.assignment, kc.k, art.corpus, cfg.cluster.top_terms);
    const auto cluster_pol =
        cluster_polarity(clusters.assignment, kc.k, model.doc_topic, model.num_topics, polarity);
    const auto distances = hellinger_matrix(clusters.centroids, static_cast<std::size_t>(kc.k), dim);

    std::ostringstream assign_csv;
    CsvWriter aw(assign_csv);
    aw.row({"review_id", "cluster"});
    for (std::size_t i = 0; i < n; ++i) {
        aw.row({art.corpus.doc_ids[i], std::to_string(clusters.assignment[i])});
    }
    io.write("cluster/clusters.csv", assign_csv.str());

    std::vector<std::string> cluster_names;
    for (int c = 0; c < kc.k; ++c) cluster_names.push_back(std::to_string(c));
    io.write("cluster/centroids.csv",
             matrix_to_csv(clusters.centroids, static_cast<std::size_t>(kc.k), dim, "cluster",
                           topic_names(model.num_topics), cluster_names));
    io.write("cluster/hellinger.csv",
             matrix_to_csv(distances, static_cast<std::size_t>(kc.k), static_cast<std::size_t>(kc.k),
                           "cluster", cluster_names, cluster_names));

    // Mean available star rating per cluster and dimension.
    std::vector<std::array<double, kNumRatings>> rating_sum(static_cast<std::size_t>(kc.k));
    std::vector<std::array<int, kNumRatings>> rating_n(static_cast<std::size_t>(kc.k));
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(clusters.assignment[i]);
        for (std::size_t q = 0; q < kNumRatings; ++q) {
            if (art.reviews[i].ratings[q]) {
                rating_sum[c][q] += *art.reviews[i].ratings[q];
                ++rating_n[c][q];
            }
        }
    }

    std::ostringstream summary_csv;
    CsvWriter sw(summary_csv);
    {
        std::vector<std::string> header = {"cluster", "size", "polarity", "top_terms"};
        for (const auto& k : kRatingKeys) header.push_back("mean_" + std::string(k));
        sw.row(header);
        for (int c = 0; c < kc.k; ++c) {
            std::string terms;
            for (const auto& ts : labels[static_cast<std::size_t>(c)]) {
                if (!terms.empty()) terms += " ";
                terms += art.vocabulary.terms[static_cast<std::size_t>(ts.term)];
            }
            std::vector<std::string> row = {std::to_string(c),
                                            std::to_string(clusters.sizes[static_cast<std::size_t>(c)]),
                                            std::string(polarity_name(cluster_pol[static_cast<std::size_t>(c)])),
                                            terms};
            for (std::size_t q = 0; q < kNumRatings; ++q) {
                const auto cnt = rating_n[static_cast<std::size_t>(c)][q];
                row.push_back(cnt > 0 ? format_double(rating_sum[static_cast<std::size_t>(c)][q] / cnt)
                                      : "");
            }
            sw.row(row);
        }
    }
    io.write("cluster/cluster_summary.csv", summary_csv.str());

    json info;
    info["inertia"] = clusters.inertia;
    info["iterations_used"] = clusters.iterations_used;
    info["restart_chosen"] = clusters.restart_chosen;
    info["empty_cluster_repairs"] = clusters.empty_cluster_repairs;
    io.write("cluster/kmeans.json", info.dump(2) + "\n");
}

// ---------------------------------------------------------------- report --

void stage_report(StageIo& io) {
    auto art = load_corpus_artifacts(io);
    const LdaModel model = load_model_artifacts(io, art);

    json report;
    {
        std::ifstream in(io.upstream_path("sweep/selection.json"));
        report["selection"] = json::parse(in);
    }
    const auto prev = prevalence(model, art.corpus);
    std::vector<int> order(static_cast<std::size_t>(model.num_topics));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return prev[static_cast<std::size_t>(a)] > prev[static_cast<std::size_t>(b)]; });

    json topics = json::array();
    for (int t : order) {
        json tj;
        tj["topic"] = t + 1;
        tj["prevalence"] = prev[static_cast<std::size_t>(t)];
        std::string words;
        for (const auto& [term, p] : top_words(model, t, 7)) {
            (void)p;
            if (!words.empty()) words += ", ";
            words += art.vocabulary.terms[static_cast<std::size_t>(term)];
        }
        tj["top_words"] = words;
        topics.push_back(tj);
    }
    report["topics_by_prevalence"] = topics;

    {
        std::ifstream in(io.upstream_path("link/metrics.json"));
        report["forest_metrics"] = json::parse(in);
    }
    {
        CsvReader imp(io.upstream_path("link/importance.csv"));
        const std::size_t c_dim = imp.column("dimension");
        const std::size_t c_label = imp.column("label");
        const std::size_t c_rank = imp.column("rank");
        json top = json::object();
        std::vector<std::string> row;
        while (imp.next(row)) {
            if (std::stoi(row[c_rank]) <= 10) {
                top[row[c_dim]].push_back(row[c_label]);
            }
        }
        report["forest_top10_importance"] = top;
    }
    {
        std::ifstream in(io.upstream_path("panel/fe_results.json"));
        report["fixed_effects"] = json::parse(in);
    }
    std::ifstream fe_txt(io.upstream_path("panel/fe_table.txt"));
    std::ostringstream fe_buf;
    fe_buf << fe_txt.rdbuf();

    std::ostringstream cv_buf;
    {
        std::ifstream in(io.upstream_path("link/cv_table.csv"));
        cv_buf << in.rdbuf();
    }
    report["cv_table_csv"] = cv_buf.str();

    json clusters = json::array();
    {
        CsvReader cs(io.upstream_path("cluster/cluster_summary.csv"));
        const std::size_t c_id = cs.column("cluster");
        const std::size_t c_size = cs.column("size");
        const std::size_t c_pol = cs.column("polarity");
        const std::size_t c_terms = cs.column("top_terms");
        std::vector<std::string> row;
        std::vector<std::tuple<int, int, std::string, std::string>> all;
        while (cs.next(row)) {
            all.emplace_back(std::stoi(row[c_size]), std::stoi(row[c_id]), row[c_pol], row[c_terms]);
        }
        std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
            return std::get<0>(a) > std::get<0>(b);
        });
        for (std::size_t i = 0; i < std::min<std::size_t>(all.size(), 10); ++i) {
            clusters.push_back({{"cluster", std::get<1>(all[i])},
                                {"size", std::get<0>(all[i])},
                                {"polarity", std::get<2>(all[i])},
                                {"top_terms", std::get<3>(all[i])}});
        }
    }
    report["largest_clusters"] = clusters;

    io.write("report/report.json", report.dump(2) + "\n");

    std::ostringstream text;
    text << "satkit pipeline report\n======================\n\n";
    text << "Selected topics: K = " << report["selection"]["chosen_k"].get<int>() << "\n";
    text << report["selection"]["summary"].get<std::string>() << "\n\n";
    text << "Most prevalent topics\n---------------------\n";
    for (std::size_t i = 0; i < std::min<std::size_t>(topics.size(), 10); ++i) {
        const auto& tj = topics[i];
        text << "  topic" << tj["topic"].get<int>() << "  prevalence "
             << format_double(tj["prevalence"].get<double>()) << "  [" << tj["top_words"].get<std::string>()
             << "]\n";
    }
    text << "\nRating-link models (OOB accuracy)\n---------------------------------\n";
    for (std::size_t q = 0; q < kNumRatings; ++q) {
        const std::string key(kRatingKeys[q]);
        if (report["forest_metrics"].contains(key) && report["forest_metrics"][key].contains("accuracy")) {
            text << "  " << kRatingNames[q] << ": "
                 << format_double(report["forest_metrics"][key]["accuracy"].get<double>()) << "\n";
        }
    }
    text << "\nCross-validation RMSE\n---------------------\n" << cv_buf.str();
    text << "\nTwo-way fixed effects\n---------------------\n" << fe_buf.str();
    text << "\nLargest review clusters\n-----------------------\n";
    for (const auto& cj : clusters) {
        text << "  cluster " << cj["cluster"].get<int>() << " (" << cj["size"].get<int>() << " reviews, "
             << cj["polarity"].get<std::string>() << "): " << cj["top_terms"].get<std::string>() << "\n";
    }
    io.write("report/report.txt", text.str());
}

}  // namespace

std::vector<std::string> run_stage(Stage stage, const PipelineConfig& config) {
    StageIo io(config, stage);
    switch (stage) {
        case Stage::ingest: stage_ingest(io); break;
        case Stage::sweep: stage_sweep(io); break;
        case Stage::fit: stage_fit(io); break;
        case Stage::graph: stage_graph(io); break;
        case Stage::link: stage_link(io); break;
        case Stage::panel: stage_panel(io); break;
        case Stage::cluster: stage_cluster(io); break;
        case Stage::report: stage_report(io); break;
    }
    return io.written;
}

}  // namespace satkit
