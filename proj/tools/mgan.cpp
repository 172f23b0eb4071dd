// mgan: command-line driver for graph building, training, evaluation,
// prediction and ablation runs.
//
// Exit status: 0 success, 1 usage error, 2 data or contract error.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>

#include "mgan/checkpoint.hpp"
#include "mgan/corpus.hpp"
#include "mgan/error.hpp"
#include "mgan/eval.hpp"
#include "mgan/pipeline.hpp"
#include "mgan/trainer.hpp"

namespace fs = std::filesystem;
using namespace mgan;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Key {
    const char* name;
    const char* fallback;
    const char* help;
};

const std::vector<Key> kKeys = {
    {"corpus", "", "labeled pair file"},
    {"format", "jsonl", "pair file format: jsonl or tsv"},
    {"pairs", "", "labeled pair file to evaluate"},
    {"embeddings", "", "word vector file (token followed by embed_dim reals per line)"},
    {"embed_dim", "300", "embedding dimension"},
    {"stopwords", "", "stopword file, one token per line (default: bundled list)"},
    {"graph_cache", "", "directory of cached keyword graphs"},
    {"out", "", "output directory"},
    {"checkpoint", "", "model checkpoint file"},
    {"idf", "", "idf table (default: idf.tsv beside the checkpoint)"},
    {"query", "", "query text"},
    {"document", "", "document text"},
    {"lambda", "1", "self-loop weight of the graph convolution"},
    {"pool_size", "20", "vertices kept by rank-and-pool (K)"},
    {"num_layers", "2", "graph convolution layers (L)"},
    {"hidden_size", "100", "classifier hidden width"},
    {"conv_kernel_width", "3", "query encoder kernel width (odd)"},
    {"max_query_len", "16", "query tokens kept"},
    {"use_gcn", "true", "enable graph convolution"},
    {"use_attention", "true", "enable vertex-aware query attention"},
    {"use_query_encoder", "true", "enable the convolutional query encoder"},
    {"learning_rate", "0.001", "Adam learning rate"},
    {"epochs", "5", "training epochs"},
    {"batch_size", "32", "mini-batch size"},
    {"seed", "1", "initialization and shuffling seed"},
    {"split_seed", "1", "train/dev/test shuffle seed"},
    {"train_ratio", "0.6", "training fraction"},
    {"dev_ratio", "0.2", "dev fraction"},
    {"test_ratio", "0.2", "test fraction"},
    {"distance_threshold", "20", "maximum mean token distance for an edge"},
    {"keyword_fraction", "0.2", "fraction of unique tokens kept as keywords"},
    {"threads", "0", "worker threads for build-graphs (0: hardware concurrency)"},
};

const std::vector<std::string> kModelKeys = {"lambda",          "pool_size",     "num_layers",       "hidden_size",
                                             "conv_kernel_width", "max_query_len", "use_gcn",          "use_attention",
                                             "use_query_encoder", "embed_dim"};
const std::vector<std::string> kTrainKeys = {"learning_rate", "epochs",      "batch_size", "seed",
                                             "split_seed",    "train_ratio", "dev_ratio",  "test_ratio"};
const std::vector<std::string> kPreprocessKeys = {"stopwords", "graph_cache", "distance_threshold", "keyword_fraction"};

std::string flag_name(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return "--" + key;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

class RunConfig {
public:
    RunConfig() {
        for (const auto& k : kKeys) values_[k.name] = k.fallback;
    }

    void load_file(const fs::path& path) {
        std::ifstream in(path);
        if (!in) throw UsageError("--config: cannot read " + path.string());
        std::string line;
        for (std::size_t n = 1; std::getline(in, line); ++n) {
            line = trim(line);
            if (line.empty() || line[0] == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw UsageError(path.string() + ":" + std::to_string(n) + ": expected key=value");
            std::string key = trim(line.substr(0, eq));
            std::replace(key.begin(), key.end(), '-', '_');
            if (!values_.count(key)) throw UsageError(path.string() + ":" + std::to_string(n) + ": unknown key " + key);
            values_[key] = trim(line.substr(eq + 1));
        }
    }

    void set(const std::string& key, const std::string& value) { values_.at(key) = value; }
    const std::string& str(const std::string& key) const { return values_.at(key); }
    bool given(const std::string& key) const { return !str(key).empty(); }

    const std::string& require(const std::string& key) const {
        if (!given(key)) throw UsageError(flag_name(key) + " is required");
        return str(key);
    }

    double real(const std::string& key) const {
        const auto& s = str(key);
        double v = 0.0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size())
            throw UsageError(flag_name(key) + ": expected a number, got \"" + s + "\"");
        return v;
    }

    std::uint64_t whole(const std::string& key) const {
        const auto& s = str(key);
        std::uint64_t v = 0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size())
            throw UsageError(flag_name(key) + ": expected a nonnegative integer, got \"" + s + "\"");
        return v;
    }

    bool flag(const std::string& key) const {
        const auto& s = str(key);
        if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
        if (s == "false" || s == "0" || s == "no" || s == "off") return false;
        throw UsageError(flag_name(key) + ": expected true or false, got \"" + s + "\"");
    }

    // Effective settings for the keys a subcommand accepts, in table order.
    std::string dump(const std::vector<std::string>& keys) const {
        std::string out;
        for (const auto& k : kKeys)
            if (std::find(keys.begin(), keys.end(), k.name) != keys.end())
                out += std::string(k.name) + "=" + values_.at(k.name) + "\n";
        return out;
    }

private:
    std::map<std::string, std::string> values_;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

ModelConfig model_config(const RunConfig& cfg) {
    ModelConfig c;
    c.lambda = cfg.real("lambda");
    c.pool_size = cfg.whole("pool_size");
    c.num_layers = cfg.whole("num_layers");
    c.embed_dim = cfg.whole("embed_dim");
    c.hidden_size = cfg.whole("hidden_size");
    c.conv_kernel_width = cfg.whole("conv_kernel_width");
    c.max_query_len = cfg.whole("max_query_len");
    c.use_gcn = cfg.flag("use_gcn");
    c.use_attention = cfg.flag("use_attention");
    c.use_query_encoder = cfg.flag("use_query_encoder");
    c.validate();
    return c;
}

TrainConfig train_config(const RunConfig& cfg) {
    TrainConfig t;
    t.learning_rate = cfg.real("learning_rate");
    t.epochs = cfg.whole("epochs");
    t.batch_size = cfg.whole("batch_size");
    t.seed = cfg.whole("seed");
    t.validate();
    return t;
}

PreprocessConfig preprocess_config(const RunConfig& cfg) {
    PreprocessConfig p;
    p.distance_threshold = cfg.whole("distance_threshold");
    p.keyword_fraction = cfg.real("keyword_fraction");
    p.max_query_len = cfg.whole("max_query_len");
    if (p.distance_threshold == 0) throw DataError("distance threshold must be positive");
    if (!(p.keyword_fraction > 0.0 && p.keyword_fraction <= 1.0)) throw DataError("keyword fraction must lie in (0, 1]");
    return p;
}

StopwordSet stopwords_from(const std::string& path) { return path.empty() ? default_stopwords() : load_stopwords(path); }

std::optional<fs::path> cache_dir(const RunConfig& cfg) {
    if (!cfg.given("graph_cache")) return std::nullopt;
    return fs::path(cfg.str("graph_cache"));
}

std::vector<LabeledPair> load_corpus(const RunConfig& cfg, const std::string& key) {
    return load_pairs(cfg.require(key), parse_pair_format(cfg.str("format")));
}

SplitSet split_corpus(const RunConfig& cfg, const std::vector<LabeledPair>& pairs) {
    return split(pairs, {cfg.real("train_ratio"), cfg.real("dev_ratio"), cfg.real("test_ratio")}, cfg.whole("split_seed"));
}

fs::path existing_checkpoint(const RunConfig& cfg) {
    const fs::path path = cfg.require("checkpoint");
    if (!fs::is_regular_file(path)) throw DataError("--checkpoint: no such file: " + path.string());
    return path;
}

// Rebuilds the preprocessing a checkpoint was trained with.
Preprocessor checkpoint_preprocessor(const RunConfig& cfg, const fs::path& checkpoint_path, const Checkpoint& ck) {
    const fs::path idf_path = cfg.given("idf") ? fs::path(cfg.str("idf")) : checkpoint_path.parent_path() / "idf.tsv";
    if (!fs::is_regular_file(idf_path)) throw DataError("--idf: no such file: " + idf_path.string());
    PreprocessConfig p = preprocess_config(cfg);
    const auto meta = [&](const char* key) -> const std::string* {
        const auto it = ck.metadata.find(key);
        return it == ck.metadata.end() ? nullptr : &it->second;
    };
    if (const auto* v = meta("distance_threshold")) p.distance_threshold = std::stoul(*v);
    if (const auto* v = meta("keyword_fraction")) p.keyword_fraction = std::stod(*v);
    p.max_query_len = ck.config.max_query_len;
    std::string stop = cfg.str("stopwords");
    if (stop.empty())
        if (const auto* v = meta("stopwords")) stop = *v;
    return Preprocessor(load_idf(idf_path), stopwords_from(stop), p, cache_dir(cfg));
}

std::vector<std::string> distinct_documents(const std::vector<LabeledPair>& pairs) {
    std::vector<std::string> docs;
    std::unordered_set<std::string> seen;
    for (const auto& p : pairs)
        if (seen.insert(p.document).second) docs.push_back(p.document);
    return docs;
}

// ---------------------------------------------------------------------------

int build_graphs(const RunConfig& cfg) {
    const auto pairs = load_corpus(cfg, "corpus");
    const fs::path cache = cfg.require("graph_cache");
    const auto docs = distinct_documents(pairs);
    const Preprocessor pre(document_idf(pairs), stopwords_from(cfg.str("stopwords")), preprocess_config(cfg), cache);
    fs::create_directories(cache);

    std::size_t threads = cfg.whole("threads");
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, std::max<std::size_t>(1, docs.size()));

    std::vector<AdjacencyStats> stats(docs.size());
    std::vector<std::exception_ptr> errors(docs.size());
    std::atomic<std::size_t> next{0};
    const auto work = [&] {
        for (std::size_t i; (i = next++) < docs.size();) {
            try {
                stats[i] = adjacency_stats(pre.graph(docs[i]));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    double vertices = 0.0, edges = 0.0;
    for (const auto& s : stats) {
        vertices += static_cast<double>(s.vertex_count);
        edges += static_cast<double>(s.edge_count);
    }
    const double n = std::max<double>(1.0, static_cast<double>(docs.size()));
    std::printf("built %zu keyword graphs in %s (mean %.2f vertices, %.2f edges)\n", docs.size(), cache.c_str(),
                vertices / n, edges / n);
    if (cfg.given("out")) {
        fs::create_directories(cfg.str("out"));
        write_text(fs::path(cfg.str("out")) / "run_config.txt",
                   cfg.dump({"corpus", "format", "stopwords", "graph_cache", "distance_threshold", "keyword_fraction"}));
    }
    return 0;
}

int train_command(const RunConfig& cfg, const std::vector<std::string>& keys) {
    const auto pairs = load_corpus(cfg, "corpus");
    const fs::path out = cfg.require("out");
    const std::string embeddings = cfg.require("embeddings");
    const ModelConfig mc = model_config(cfg);
    const TrainConfig tc = train_config(cfg);
    const PreprocessConfig pc = preprocess_config(cfg);

    fs::create_directories(out);
    write_text(out / "run_config.txt", cfg.dump(keys));
    const SplitSet splits = split_corpus(cfg, pairs);
    write_split(out, splits);
    const IdfTable idf = document_idf(pairs);
    save_idf(out / "idf.tsv", idf);

    const EmbeddingTable table = load_embeddings(embeddings, mc.embed_dim);
    const Preprocessor pre(idf, stopwords_from(cfg.str("stopwords")), pc, cache_dir(cfg));
    const auto train_set = pre.prepare_all(splits.train, table);
    const auto dev_set = pre.prepare_all(splits.dev, table);
    const auto test_set = pre.prepare_all(splits.test, table);

    const auto result = train(ModelParams::init(mc, tc.seed), train_set, dev_set, tc, mc);
    char buf[64];
    std::map<std::string, std::string> meta;
    meta["distance_threshold"] = std::to_string(pc.distance_threshold);
    std::snprintf(buf, sizeof buf, "%.17g", pc.keyword_fraction);
    meta["keyword_fraction"] = buf;
    meta["stopwords"] = cfg.str("stopwords");
    meta["best_epoch"] = std::to_string(result.best_epoch);
    save_checkpoint(out / "model.ckpt", Checkpoint{mc, result.best, meta});
    write_epoch_log(out / "epoch_log.csv", result.log);

    const auto& best = result.log[result.best_epoch - 1];
    std::printf("trained %zu epochs on %zu pairs; best epoch %zu, dev accuracy %.4f, dev F1 %.4f\n", result.log.size(),
                train_set.size(), result.best_epoch, best.dev_accuracy, best.dev_f1);
    if (!test_set.empty()) {
        const Metrics m = evaluate(test_set, result.best, mc);
        write_text(out / "test_metrics.json", metrics_json(m));
        std::printf("test accuracy %.4f, test F1 %.4f\n", m.accuracy, m.f1);
    }
    std::printf("wrote %s\n", (out / "model.ckpt").c_str());
    return 0;
}

int evaluate_command(const RunConfig& cfg, const std::vector<std::string>& keys) {
    const fs::path ckpt_path = existing_checkpoint(cfg);
    const auto pairs = load_corpus(cfg, "pairs");
    const Checkpoint ck = load_checkpoint(ckpt_path);
    const EmbeddingTable table = load_embeddings(cfg.require("embeddings"), ck.config.embed_dim);
    const Preprocessor pre = checkpoint_preprocessor(cfg, ckpt_path, ck);
    const auto samples = pre.prepare_all(pairs, table);
    const std::string report = metrics_json(evaluate(samples, ck.params, ck.config));
    std::fputs(report.c_str(), stdout);
    if (cfg.given("out")) {
        const fs::path out = cfg.str("out");
        fs::create_directories(out);
        write_text(out / "metrics.json", report);
        write_text(out / "run_config.txt", cfg.dump(keys));
    }
    return 0;
}

int predict_command(const RunConfig& cfg) {
    const fs::path ckpt_path = existing_checkpoint(cfg);
    const std::string query = cfg.require("query");
    const std::string document = cfg.require("document");
    const Checkpoint ck = load_checkpoint(ckpt_path);
    const EmbeddingTable table = load_embeddings(cfg.require("embeddings"), ck.config.embed_dim);
    const Preprocessor pre = checkpoint_preprocessor(cfg, ckpt_path, ck);
    const Sample s = pre.prepare({query, document, 0}, table);
    std::printf("%.17g\n", predict(s.input, s.graph, ck.params, ck.config));
    return 0;
}

struct AblationRow {
    std::string name;
    ModelConfig config;
    double dev_accuracy = 0.0;
    std::optional<Metrics> test;
};

int ablate_command(const RunConfig& cfg, const std::vector<std::string>& keys) {
    const auto pairs = load_corpus(cfg, "corpus");
    const fs::path out = cfg.require("out");
    const std::string embeddings = cfg.require("embeddings");
    const ModelConfig base = model_config(cfg);
    const TrainConfig tc = train_config(cfg);

    fs::create_directories(out);
    write_text(out / "run_config.txt", cfg.dump(keys));
    const SplitSet splits = split_corpus(cfg, pairs);
    const IdfTable idf = document_idf(pairs);
    const EmbeddingTable table = load_embeddings(embeddings, base.embed_dim);
    const Preprocessor pre(idf, stopwords_from(cfg.str("stopwords")), preprocess_config(cfg), cache_dir(cfg));
    const auto train_set = pre.prepare_all(splits.train, table);
    const auto dev_set = pre.prepare_all(splits.dev, table);
    const auto test_set = pre.prepare_all(splits.test, table);

    std::vector<AblationRow> rows;
    const auto add = [&](std::string name, auto edit) {
        ModelConfig c = base;
        edit(c);
        rows.push_back({std::move(name), c, 0.0, std::nullopt});
    };
    add("full", [](ModelConfig&) {});
    add("no-gcn", [](ModelConfig& c) { c.use_gcn = false; });
    add("no-attention", [](ModelConfig& c) { c.use_attention = false; });
    add("no-query-encoder", [](ModelConfig& c) { c.use_query_encoder = false; });
    for (std::size_t k : {5, 20}) add("K=" + std::to_string(k), [k](ModelConfig& c) { c.pool_size = k; });
    for (double lambda : {0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0}) {
        char name[32];
        std::snprintf(name, sizeof name, "lambda=%g", lambda);
        add(name, [lambda](ModelConfig& c) { c.lambda = lambda; });
    }

    for (auto& row : rows) {
        const auto r = train(ModelParams::init(row.config, tc.seed), train_set, dev_set, tc, row.config);
        row.dev_accuracy = r.log[r.best_epoch - 1].dev_accuracy;
        if (!test_set.empty()) row.test = evaluate(test_set, r.best, row.config);
        std::fprintf(stderr, "%s done\n", row.name.c_str());
    }

    std::vector<double> dev_scores, test_scores;
    std::vector<int> dev_labels, test_labels;
    for (const auto& p : splits.dev) {
        dev_scores.push_back(tfidf_cosine_baseline(p, idf));
        dev_labels.push_back(p.label);
    }
    for (const auto& p : splits.test) {
        test_scores.push_back(tfidf_cosine_baseline(p, idf));
        test_labels.push_back(p.label);
    }
    const double threshold = tune_threshold(dev_scores, dev_labels);

    std::string csv = "variant,use_gcn,use_attention,use_query_encoder,pool_size,lambda,dev_accuracy,test_accuracy,test_f1\n";
    std::string table_text = "variant            dev_acc  test_acc  test_f1\n";
    char line[256];
    const auto emit = [&](const std::string& name, const std::string& flags, double dev, std::optional<Metrics> test) {
        const double ta = test ? test->accuracy : std::nan(""), tf = test ? test->f1 : std::nan("");
        std::snprintf(line, sizeof line, "%s,%s,%.17g,%.17g,%.17g\n", name.c_str(), flags.c_str(), dev, ta, tf);
        csv += line;
        std::snprintf(line, sizeof line, "%-18s %7.4f  %8.4f  %7.4f\n", name.c_str(), dev, ta, tf);
        table_text += line;
    };
    for (const auto& row : rows) {
        std::snprintf(line, sizeof line, "%d,%d,%d,%zu,%.17g", row.config.use_gcn, row.config.use_attention,
                      row.config.use_query_encoder, row.config.pool_size, row.config.lambda);
        emit(row.name, line, row.dev_accuracy, row.test);
    }
    std::optional<Metrics> baseline_test;
    if (!test_scores.empty()) baseline_test = metrics(test_scores, test_labels, threshold);
    emit("tfidf-baseline", ",,,,", metrics(dev_scores, dev_labels, threshold).accuracy, baseline_test);

    write_text(out / "ablation.csv", csv);
    std::fputs(table_text.c_str(), stdout);
    return 0;
}

std::vector<std::string> concat_keys(std::initializer_list<std::vector<std::string>> lists) {
    std::vector<std::string> out;
    for (const auto& l : lists) out.insert(out.end(), l.begin(), l.end());
    return out;
}

struct Subcommand {
    CLI::App* app = nullptr;
    std::vector<std::string> keys;
    std::map<std::string, std::string> overrides;
    std::string config_file;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Keyword-graph relevance matching: build graphs, train, evaluate, predict, ablate"};
    app.name("mgan");
    app.require_subcommand(1, 1);

    std::map<std::string, Subcommand> subs;
    const auto add = [&](const std::string& name, const std::string& help, std::vector<std::string> keys) {
        auto& s = subs[name];
        s.app = app.add_subcommand(name, help);
        s.keys = std::move(keys);
        s.app->add_option("--config", s.config_file, "key=value file; flags override it");
        for (const auto& k : s.keys) {
            const auto it = std::find_if(kKeys.begin(), kKeys.end(), [&](const Key& key) { return key.name == k; });
            s.app->add_option(flag_name(k), s.overrides[k], std::string(it->help) + " [" + it->fallback + "]");
        }
    };
    add("build-graphs", "extract keywords and cache one keyword graph per document",
        {"corpus", "format", "stopwords", "graph_cache", "distance_threshold", "keyword_fraction", "threads", "out"});
    const auto train_keys =
        concat_keys({{"corpus", "format", "embeddings", "out"}, kModelKeys, kTrainKeys, kPreprocessKeys});
    add("train", "split a corpus, train a model and write checkpoint, logs and splits", train_keys);
    add("evaluate", "score a labeled pair file with a checkpoint and report metrics",
        {"checkpoint", "pairs", "format", "embeddings", "idf", "stopwords", "graph_cache", "out"});
    add("predict", "print the relevance probability of one query/document pair",
        {"checkpoint", "embeddings", "idf", "stopwords", "query", "document"});
    add("ablate", "train the variant grid and write a comparison table", train_keys);

    if (argc > 1 && argv[1][0] != '-' && !subs.count(argv[1])) {
        std::cerr << "error: unknown subcommand " << argv[1] << "\n\n" << app.help();
        return 1;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    for (auto& [name, s] : subs) {
        if (!s.app->parsed()) continue;
        try {
            RunConfig cfg;
            if (!s.config_file.empty()) cfg.load_file(s.config_file);
            for (const auto& k : s.keys)
                if (s.app->count(flag_name(k)) > 0) cfg.set(k, s.overrides[k]);
            if (name == "build-graphs") return build_graphs(cfg);
            if (name == "train") return train_command(cfg, s.keys);
            if (name == "evaluate") return evaluate_command(cfg, s.keys);
            if (name == "predict") return predict_command(cfg);
            if (name == "ablate") return ablate_command(cfg, s.keys);
        } catch (const UsageError& e) {
            std::cerr << "error: " << e.what() << "\n\n" << s.app->help();
            return 1;
        } catch (const DataError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        }
    }
    return 1;
}
