#include "simt/harness/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "simt/corpus_io.hpp"
#include "simt/error.hpp"
#include "simt/harness/sweep.hpp"
#include "simt/harness/synthetic.hpp"
#include "simt/metrics/metrics.hpp"
#include "simt/models/model_io.hpp"
#include "simt/policy/psfuture.hpp"
#include "simt/training/training.hpp"

namespace simt::harness {

namespace fs = std::filesystem;

std::vector<std::string> config_file_args(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file " + path);
    }
    std::vector<std::string> args;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        auto trim = [](std::string s) {
            const auto first = s.find_first_not_of(" \t\r");
            if (first == std::string::npos) {
                return std::string();
            }
            const auto last = s.find_last_not_of(" \t\r");
            return s.substr(first, last - first + 1);
        };
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
        }
        args.push_back("--" + key);
        args.push_back(trim(line.substr(eq + 1)));
    }
    return args;
}

namespace {

using Echo = std::vector<std::pair<std::string, std::string>>;

Echo effective_config(const CLI::App &sub) {
    Echo echo;
    echo.emplace_back("command", sub.get_name());
    for (const CLI::Option *opt : sub.get_options()) {
        const std::string name = opt->get_single_name();
        // outputs and worker count don't change results; omitted so reruns compare byte for byte
        static const std::set<std::string> skipped = {"help",    "config",     "jobs",      "out",
                                                      "out-dir", "hyp-out",    "delays-out", "curve"};
        if (skipped.count(name) > 0) {
            continue;
        }
        echo.emplace_back(name, opt->count() > 0 ? opt->results().back() : opt->get_default_str());
    }
    return echo;
}

std::string echo_header(const Echo &echo) {
    std::string out;
    for (const auto &[key, value] : echo) {
        out += "# " + key + "=" + value + "\n";
    }
    return out;
}

nlohmann::json echo_json(const Echo &echo) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto &[key, value] : echo) {
        j[key] = value;
    }
    return j;
}

std::string echo_json_line(const Echo &echo) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto &[key, value] : echo) {
        j[key] = value;
    }
    return nlohmann::ordered_json{{"config", j}}.dump();
}

void write_output(const std::string &path, const std::string &content) {
    if (path == "-") {
        std::cout << content;
        std::cout.flush();
        return;
    }
    const fs::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(p, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path);
    }
    out << content;
    if (!out) {
        throw IoError("write failed for " + path);
    }
}

std::vector<std::string> split_list(const std::string &text) {
    std::vector<std::string> items;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item.erase(0, item.find_first_not_of(' '));
        item.erase(item.find_last_not_of(' ') + 1);
        if (!item.empty()) {
            items.push_back(item);
        }
    }
    return items;
}

double parse_double(const std::string &text, const std::string &what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size()) {
            return v;
        }
    } catch (const std::exception &) {
    }
    throw ConfigError(what + ": '" + text + "' is not a number");
}

int parse_int(const std::string &text, const std::string &what) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(text, &used);
        if (used == text.size()) {
            return v;
        }
    } catch (const std::exception &) {
    }
    throw ConfigError(what + ": '" + text + "' is not an integer");
}

std::vector<double> parse_double_list(const std::string &text, const std::string &what) {
    std::vector<double> out;
    for (const auto &item : split_list(text)) {
        out.push_back(parse_double(item, what));
    }
    return out;
}

std::vector<int> parse_int_list(const std::string &text, const std::string &what) {
    std::vector<int> out;
    for (const auto &item : split_list(text)) {
        out.push_back(parse_int(item, what));
    }
    return out;
}

std::optional<int> parse_r_max(const std::string &text) {
    if (text == "none" || text.empty()) {
        return std::nullopt;
    }
    const int v = parse_int(text, "--r-max");
    if (v < 1) {
        throw ConfigError("--r-max must be >= 1 or 'none'");
    }
    return v;
}

struct SuffixOptions {
    std::string names = "eos";
    std::string tokens;
    int random_count = 4;
    int random_top_k = 200;

    void add_to(CLI::App *sub, bool list) {
        sub->add_option("--suffix", names,
                        list ? "Comma-separated suffixes: eos, unk-eos, ellipsis-eos, random, oracle"
                             : "Suffix: eos, unk-eos, ellipsis-eos, random, oracle");
        sub->add_option("--suffix-tokens", tokens, "Custom fixed suffix (space-separated tokens)");
        sub->add_option("--random-count", random_count, "Tokens per random suffix");
        sub->add_option("--random-top-k", random_top_k, "Random suffix draws from the k most frequent tokens");
    }

    std::vector<policy::SuffixSpec> resolve(const Vocabulary &vocab, std::uint64_t seed) const {
        const auto list = split_list(names);
        const bool uses_random = std::find(list.begin(), list.end(), "random") != list.end();
        policy::RandomSuffix random{random_count, random_top_k, seed};
        if (uses_random && random.top_k > static_cast<int>(vocab.ranked_count())) {
            std::cerr << "warning: --random-top-k " << random.top_k << " exceeds the " << vocab.ranked_count()
                      << " ranked tokens; using " << vocab.ranked_count() << "\n";
            random.top_k = static_cast<int>(vocab.ranked_count());
        }
        std::vector<policy::SuffixSpec> specs;
        for (const auto &name : list) {
            specs.push_back(policy::named_suffix(name, vocab, random));
        }
        if (!tokens.empty()) {
            specs.push_back(policy::custom_suffix(tokens, vocab));
        }
        return specs;
    }
};

void check_exists(const std::string &path, const std::string &flag) {
    if (!fs::exists(path)) {
        throw ConfigError(flag + ": no such file " + path);
    }
}

// gen-corpus

struct GenOptions {
    std::string lang = "copy";
    int window = 2;
    int vocab_size = 20;
    int min_len = 3;
    int max_len = 8;
    int pairs = 200;
    std::uint64_t seed = 0;
    std::string out_dir;
};

int run_gen(const CLI::App &sub, const GenOptions &o) {
    SyntheticSpec spec;
    spec.kind = parse_synthetic_kind(o.lang);
    spec.window = o.window;
    spec.vocab_size = o.vocab_size;
    spec.min_len = o.min_len;
    spec.max_len = o.max_len;
    spec.n_pairs = o.pairs;
    spec.seed = o.seed;
    const SyntheticCorpus corpus = generate_corpus(spec);

    const fs::path dir(o.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    write_parallel_corpus(corpus.vocab, corpus.pairs, dir / "src.txt", dir / "tgt.txt", dir / "align.txt");
    models::save_model(dir / "table.json", corpus.model, corpus.vocab, echo_json(effective_config(sub)));
    std::cerr << "wrote " << corpus.pairs.size() << " pairs and table.json to " << dir.string() << "\n";
    return 0;
}

// train

struct TrainOptions {
    std::string src;
    std::string tgt;
    std::string out;
    std::string curve;
    std::string regime = "offline";
    double r = 0.5;
    std::string k_choices = "1,3,5,7,9";
    int epochs = 30;
    int batch_size = 4;
    double lr = 0.05;
    int d = 32;
    int max_len = 64;
    std::string encoder = "bi";
    std::uint64_t seed = 0;
};

int run_train(const CLI::App &sub, const TrainOptions &o) {
    check_exists(o.src, "--src");
    check_exists(o.tgt, "--tgt");
    training::TrainConfig cfg;
    cfg.regime.kind = training::parse_regime(o.regime);
    cfg.regime.ratio_r = cfg.regime.kind == training::RegimeKind::P2F ? o.r : 0.0;
    cfg.regime.k_choices = parse_int_list(o.k_choices, "--k-choices");
    cfg.epochs = o.epochs;
    cfg.batch_size = o.batch_size;
    cfg.lr = o.lr;
    cfg.seed = o.seed;
    cfg.validate();

    std::vector<Sentence> sentences = read_token_file(o.src);
    const std::vector<Sentence> targets = read_token_file(o.tgt);
    sentences.insert(sentences.end(), targets.begin(), targets.end());
    const Vocabulary vocab = build_vocabulary(sentences);
    const auto corpus = load_parallel_corpus(vocab, o.src, o.tgt);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto longest = std::max(corpus[i].source.size(), corpus[i].target.size());
        if (static_cast<int>(longest) > o.max_len) {
            throw ConfigError("line " + std::to_string(i + 1) + " has " + std::to_string(longest) +
                              " tokens with EOS; raise --max-len (" + std::to_string(o.max_len) + ")");
        }
    }

    models::MicroConfig mc;
    mc.vocab_size = vocab.size();
    mc.d = o.d;
    mc.max_len = o.max_len;
    mc.mode = models::parse_encoder_mode(o.encoder);
    mc.bos = vocab.bos();
    if (cfg.regime.kind == training::RegimeKind::Multipath && mc.mode != models::EncoderMode::Unidirectional) {
        throw ConfigError("--regime multipath needs --encoder uni");
    }
    models::MicroModel model(mc, o.seed);

    const Echo echo = effective_config(sub);
    std::string curve = echo_header(echo) + training::epoch_csv_header() + "\n";
    const auto result = training::train(model, corpus, cfg, [&](const training::EpochStats &s) {
        std::cerr << "epoch " << s.epoch << " loss " << s.mean_loss << "\n";
        curve += training::epoch_csv_row(s) + "\n";
    });
    models::save_model(o.out, model, vocab, echo_json(echo));
    if (!o.curve.empty()) {
        write_output(o.curve, curve);
    }
    if (result.diverged) {
        std::cerr << "error: training diverged (" << *result.diverged << "); saved last good parameters to "
                  << o.out << "\n";
        return 2;
    }
    return 0;
}

// simulate

struct SimulateOptions {
    std::string model;
    std::string sentence;
    std::string src;
    int line = 0;
    double lambda = 0.2;
    SuffixOptions suffix;
    std::string r_max = "none";
    int initial_prefix = 2;
    int max_target_len = 256;
    int jobs = 1;
    std::string out = "-";
    std::string hyp_out;
    std::string delays_out;
    std::uint64_t seed = 0;
};

int run_simulate(const CLI::App &sub, const SimulateOptions &o) {
    if (o.sentence.empty() == o.src.empty()) {
        throw ConfigError("give exactly one of --sentence or --src");
    }
    check_exists(o.model, "--model");
    const models::LoadedModel loaded = models::load_model(o.model);
    const Vocabulary &vocab = loaded.vocab;

    std::vector<TokenSeq> sources;
    std::vector<int> line_numbers;
    if (!o.sentence.empty()) {
        const Sentence words = split_tokens(o.sentence);
        sources.push_back(vocab.encode_sentence(words));
        line_numbers.push_back(1);
    } else {
        check_exists(o.src, "--src");
        const auto lines = read_token_file(o.src);
        if (o.line < 0 || o.line > static_cast<int>(lines.size())) {
            throw ConfigError("--line " + std::to_string(o.line) + " outside 1.." + std::to_string(lines.size()));
        }
        for (std::size_t i = 0; i < lines.size(); ++i) {
            if (o.line == 0 || static_cast<int>(i) + 1 == o.line) {
                sources.push_back(vocab.encode_sentence(lines[i]));
                line_numbers.push_back(static_cast<int>(i) + 1);
            }
        }
    }
    for (std::size_t i = 0; i < sources.size(); ++i) {
        if (sources[i].size() < 2) {
            throw ValidationError("line " + std::to_string(line_numbers[i]) + " is empty");
        }
    }

    PolicyConfig cfg;
    cfg.lambda = o.lambda;
    cfg.r_max = parse_r_max(o.r_max);
    cfg.initial_prefix = o.initial_prefix;
    cfg.max_target_len = o.max_target_len;
    cfg.validate();
    const auto suffixes = o.suffix.resolve(vocab, o.seed);
    if (suffixes.size() != 1) {
        throw ConfigError("simulate takes exactly one suffix");
    }

    const auto results = run_psfuture(loaded.kernel(), vocab, sources, cfg, suffixes.front(), o.seed, o.jobs);

    std::string trace = echo_json_line(effective_config(sub)) + "\n";
    std::string hyps;
    std::string delays;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto &r = results[i];
        for (const auto &rec : r.trace) {
            nlohmann::ordered_json j = {{"sentence", line_numbers[i]}};
            const nlohmann::json fields = policy::to_json(rec);
            for (const auto &[key, value] : fields.items()) {
                j[key] = value;
            }
            if (rec.token) {
                j["text"] = vocab.token(*rec.token);
            }
            trace += j.dump() + "\n";
        }
        nlohmann::ordered_json summary = {{"sentence", line_numbers[i]},
                                          {"hypothesis", vocab.decode(r.hypothesis)},
                                          {"g_record", r.g_record},
                                          {"truncated", r.truncated}};
        trace += summary.dump() + "\n";
        hyps += vocab.decode(r.hypothesis) + "\n";
        for (std::size_t t = 0; t < r.g_record.size(); ++t) {
            delays += (t ? " " : "") + std::to_string(r.g_record[t]);
        }
        delays += "\n";
        if (r.truncated) {
            std::cerr << "warning: sentence " << line_numbers[i] << " hit --max-target-len\n";
        }
    }
    write_output(o.out, trace);
    if (!o.hyp_out.empty()) {
        write_output(o.hyp_out, hyps);
    }
    if (!o.delays_out.empty()) {
        write_output(o.delays_out, delays);
    }
    return 0;
}

// sweep

struct SweepOptions {
    std::string policy = "psfuture";
    std::string lambdas = "0.02,0.05,0.08,0.1,0.2,0.4";
    std::string ks = "1,3,5,7,9";
    SuffixOptions suffix;
    std::string model;
    std::string src;
    std::string tgt;
    std::string out;
    std::string r_max = "none";
    int initial_prefix = 2;
    int max_target_len = 256;
    int jobs = 1;
    std::string hallucination = "none";
    std::uint64_t seed = 0;
};

int run_sweep_cmd(const CLI::App &sub, const SweepOptions &o) {
    SweepSpec spec;
    spec.policy = parse_policy_kind(o.policy);
    spec.lambdas = parse_double_list(o.lambdas, "--lambda");
    spec.ks = parse_int_list(o.ks, "--k");
    spec.r_max = parse_r_max(o.r_max);
    spec.initial_prefix = o.initial_prefix;
    spec.max_target_len = o.max_target_len;
    spec.seed = o.seed;
    spec.jobs = o.jobs;
    if (o.hallucination == "none") {
        spec.hallucination = HallucinationMode::None;
    } else if (o.hallucination == "lexical") {
        spec.hallucination = HallucinationMode::Lexical;
    } else {
        throw ConfigError("--hallucination must be none or lexical");
    }
    if (spec.policy == PolicyKind::PsFuture && spec.lambdas.empty()) {
        throw ConfigError("sweep: lambda list is empty");
    }
    check_exists(o.model, "--model");
    check_exists(o.src, "--src");
    check_exists(o.tgt, "--tgt");
    const models::LoadedModel loaded = models::load_model(o.model);
    if (spec.policy == PolicyKind::PsFuture) {
        spec.suffixes = o.suffix.resolve(loaded.vocab, o.seed);
    }
    spec.validate();
    const auto pairs = load_parallel_corpus(loaded.vocab, o.src, o.tgt);
    const auto rows = run_sweep(loaded.kernel(), loaded.vocab, pairs, spec);

    std::string csv = echo_header(effective_config(sub)) + sweep_csv_header() + "\n";
    for (const auto &row : rows) {
        csv += sweep_csv_row(row) + "\n";
    }
    write_output(o.out, csv);
    return 0;
}

// divergence

struct DivergenceOptions {
    std::string model;
    std::string src;
    std::string tgt;
    int line = 1;
    double lambda = 0.2;
    int initial_prefix = 1;
    SuffixOptions suffix;
    std::string out = "-";
    std::uint64_t seed = 0;
};

int run_divergence(const CLI::App &sub, const DivergenceOptions &o) {
    check_exists(o.model, "--model");
    check_exists(o.src, "--src");
    check_exists(o.tgt, "--tgt");
    const models::LoadedModel loaded = models::load_model(o.model);
    const auto pairs = load_parallel_corpus(loaded.vocab, o.src, o.tgt);
    if (o.line < 1 || o.line > static_cast<int>(pairs.size())) {
        throw ConfigError("--line " + std::to_string(o.line) + " outside 1.." + std::to_string(pairs.size()));
    }
    const auto suffixes = o.suffix.resolve(loaded.vocab, o.seed);
    if (suffixes.size() != 1) {
        throw ConfigError("divergence takes exactly one suffix");
    }
    std::ostringstream body;
    emit_divergence_report(loaded.kernel(), loaded.vocab, pairs[static_cast<std::size_t>(o.line - 1)],
                           suffixes.front(), o.seed, o.lambda, o.initial_prefix, body);
    write_output(o.out, echo_header(effective_config(sub)) + body.str());
    return 0;
}

// eval

struct EvalOptions {
    std::string hyp;
    std::string ref;
    std::string src;
    std::string delays;
    std::string align;
    std::string hallucination = "none";
    std::string label_policy = "-";
    std::string label_value = "-";
    std::string label_suffix = "-";
    std::string label_r_max = "-";
    std::string out = "-";
    std::uint64_t seed = 0;
};

int run_eval(const CLI::App &sub, const EvalOptions &o) {
    for (const auto &[path, flag] : {std::pair{o.hyp, "--hyp"}, {o.ref, "--ref"}, {o.src, "--src"},
                                     {o.delays, "--delays"}}) {
        check_exists(path, flag);
    }
    const auto hyp_lines = read_token_file(o.hyp);
    const auto ref_lines = read_token_file(o.ref);
    const auto src_lines = read_token_file(o.src);
    const auto delay_lines = read_lines(o.delays);
    const std::size_t n = hyp_lines.size();
    if (ref_lines.size() != n || src_lines.size() != n || delay_lines.size() != n) {
        throw ValidationError("eval: --hyp, --ref, --src and --delays must have the same number of lines");
    }
    std::vector<Sentence> all = hyp_lines;
    all.insert(all.end(), ref_lines.begin(), ref_lines.end());
    all.insert(all.end(), src_lines.begin(), src_lines.end());
    const Vocabulary vocab = build_vocabulary(all);

    std::vector<metrics::SentenceOutput> outputs;
    std::vector<TokenSeq> refs;
    std::vector<TokenSeq> sources;
    for (std::size_t i = 0; i < n; ++i) {
        metrics::SentenceOutput out;
        for (const auto &tok : split_tokens(delay_lines[i])) {
            out.g_record.push_back(parse_int(tok, "--delays line " + std::to_string(i + 1)));
        }
        out.hypothesis = vocab.encode_sentence(hyp_lines[i]);
        if (out.g_record.size() == hyp_lines[i].size()) {
            out.hypothesis.pop_back();
        } else if (out.g_record.size() != out.hypothesis.size()) {
            throw ValidationError("eval: line " + std::to_string(i + 1) + " has " +
                                  std::to_string(out.g_record.size()) + " delays for " +
                                  std::to_string(hyp_lines[i].size()) + " hypothesis tokens");
        }
        sources.push_back(vocab.encode_sentence(src_lines[i]));
        out.source_len = static_cast<int>(sources.back().size());
        outputs.push_back(std::move(out));
        refs.push_back(vocab.encode_sentence(ref_lines[i]));
    }

    std::optional<std::vector<Alignment>> links;
    if (!o.align.empty()) {
        check_exists(o.align, "--align");
        links = read_alignment_file(o.align);
        if (links->size() != n) {
            throw ValidationError("eval: --align has " + std::to_string(links->size()) + " lines, expected " +
                                  std::to_string(n));
        }
    } else if (o.hallucination == "lexical") {
        links.emplace();
        for (std::size_t i = 0; i < n; ++i) {
            links->push_back(metrics::lexical_alignment(outputs[i].hypothesis, sources[i], vocab.eos()));
        }
    } else if (o.hallucination != "none") {
        throw ConfigError("--hallucination must be none or lexical");
    }

    SweepRow row{o.label_policy, o.label_value, o.label_suffix, o.label_r_max, {}, o.seed};
    row.result = links ? metrics::evaluate_run(vocab, outputs, refs, std::span<const Alignment>(*links))
                       : metrics::evaluate_run(vocab, outputs, refs);
    write_output(o.out, echo_header(effective_config(sub)) + sweep_csv_header() + "\n" + sweep_csv_row(row) + "\n");
    return 0;
}

std::vector<std::string> expand_config(const std::vector<std::string> &args) {
    if (args.size() < 2 || args[1].empty() || args[1][0] == '-') {
        return args;
    }
    std::optional<std::string> config;
    for (std::size_t i = 2; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            config = args[i].substr(9);
        }
    }
    if (!config) {
        return args;
    }
    std::vector<std::string> out(args.begin(), args.begin() + 2);
    const auto extra = config_file_args(*config);
    out.insert(out.end(), extra.begin(), extra.end());
    out.insert(out.end(), args.begin() + 2, args.end());
    return out;
}

} // namespace

int cli_main(const std::vector<std::string> &raw_args) {
    CLI::App app{"Simultaneous translation toolkit: PsFuture and wait-k policies, training, evaluation"};
    app.name(raw_args.empty() ? "simt" : fs::path(raw_args.front()).filename().string());
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
    app.require_subcommand(1);

    std::string config_path;
    auto add_common = [&](CLI::App *sub, std::uint64_t &seed) {
        sub->add_option("--config", config_path, "key=value file; flags on the command line take precedence");
        sub->add_option("--seed", seed, "Random seed");
    };

    GenOptions gen;
    CLI::App *gen_cmd = app.add_subcommand("gen-corpus", "Generate a synthetic parallel corpus and its table model");
    gen_cmd->add_option("--lang", gen.lang, "copy, local-swap or tail-first");
    gen_cmd->add_option("--window", gen.window, "Block size for local-swap");
    gen_cmd->add_option("--vocab-size", gen.vocab_size, "Number of content words");
    gen_cmd->add_option("--min-len", gen.min_len, "Minimum content tokens per sentence");
    gen_cmd->add_option("--max-len", gen.max_len, "Maximum content tokens per sentence");
    gen_cmd->add_option("--pairs", gen.pairs, "Number of sentence pairs");
    gen_cmd->add_option("--out-dir", gen.out_dir, "Writes src.txt, tgt.txt, align.txt and table.json")->required();
    add_common(gen_cmd, gen.seed);

    TrainOptions tr;
    CLI::App *train_cmd = app.add_subcommand("train", "Train a micro encoder-decoder");
    train_cmd->add_option("--src", tr.src, "Source sentences")->required();
    train_cmd->add_option("--tgt", tr.tgt, "Target sentences")->required();
    train_cmd->add_option("--out", tr.out, "Model file to write")->required();
    train_cmd->add_option("--curve", tr.curve, "Loss curve CSV");
    train_cmd->add_option("--regime", tr.regime, "offline, multipath or p2f");
    train_cmd->add_option("--r", tr.r, "P2F ratio r");
    train_cmd->add_option("--k-choices", tr.k_choices, "Comma-separated k values for multipath");
    train_cmd->add_option("--epochs", tr.epochs, "Epochs");
    train_cmd->add_option("--batch-size", tr.batch_size, "Sentences per batch");
    train_cmd->add_option("--lr", tr.lr, "SGD learning rate");
    train_cmd->add_option("--d", tr.d, "Model width");
    train_cmd->add_option("--max-len", tr.max_len, "Maximum sequence length");
    train_cmd->add_option("--encoder", tr.encoder, "bi or uni");
    add_common(train_cmd, tr.seed);

    SimulateOptions sim;
    CLI::App *sim_cmd = app.add_subcommand("simulate", "Stream sentences through the PsFuture policy and trace it");
    sim_cmd->add_option("--model", sim.model, "Model file")->required();
    sim_cmd->add_option("--sentence", sim.sentence, "Source sentence (space-separated tokens)");
    sim_cmd->add_option("--src", sim.src, "Source file");
    sim_cmd->add_option("--line", sim.line, "1-based line of --src; 0 decodes every line");
    sim_cmd->add_option("--lambda", sim.lambda, "Divergence threshold");
    sim.suffix.add_to(sim_cmd, false);
    sim_cmd->add_option("--r-max", sim.r_max, "Max continuous READs, or none");
    sim_cmd->add_option("--initial-prefix", sim.initial_prefix, "Source tokens read before the first decision");
    sim_cmd->add_option("--max-target-len", sim.max_target_len, "Hypothesis length cap");
    sim_cmd->add_option("--jobs", sim.jobs, "Worker threads");
    sim_cmd->add_option("--out", sim.out, "Trace JSONL ('-' for stdout)");
    sim_cmd->add_option("--hyp-out", sim.hyp_out, "Hypothesis text file");
    sim_cmd->add_option("--delays-out", sim.delays_out, "Delays file (g per target token)");
    add_common(sim_cmd, sim.seed);

    SweepOptions sw;
    CLI::App *sweep_cmd = app.add_subcommand("sweep", "Latency/quality sweep over lambda and suffixes, or k");
    sweep_cmd->add_option("--policy", sw.policy, "psfuture or waitk");
    sweep_cmd->add_option("--lambda", sw.lambdas, "Comma-separated thresholds, ascending");
    sweep_cmd->add_option("--k", sw.ks, "Comma-separated k values");
    sw.suffix.add_to(sweep_cmd, true);
    sweep_cmd->add_option("--model", sw.model, "Model file")->required();
    sweep_cmd->add_option("--src", sw.src, "Source sentences")->required();
    sweep_cmd->add_option("--tgt", sw.tgt, "Reference sentences")->required();
    sweep_cmd->add_option("--out", sw.out, "Output CSV")->required();
    sweep_cmd->add_option("--r-max", sw.r_max, "Max continuous READs, or none");
    sweep_cmd->add_option("--initial-prefix", sw.initial_prefix, "Source tokens read before the first decision");
    sweep_cmd->add_option("--max-target-len", sw.max_target_len, "Hypothesis length cap");
    sweep_cmd->add_option("--jobs", sw.jobs, "Worker threads per cell");
    sweep_cmd->add_option("--hallucination", sw.hallucination, "none or lexical");
    add_common(sweep_cmd, sw.seed);

    DivergenceOptions dv;
    CLI::App *div_cmd = app.add_subcommand("divergence", "Teacher-forced divergence matrix for one sentence pair");
    div_cmd->add_option("--model", dv.model, "Model file")->required();
    div_cmd->add_option("--src", dv.src, "Source sentences")->required();
    div_cmd->add_option("--tgt", dv.tgt, "Reference sentences")->required();
    div_cmd->add_option("--line", dv.line, "1-based line to report");
    div_cmd->add_option("--lambda", dv.lambda, "Threshold for the path column");
    div_cmd->add_option("--initial-prefix", dv.initial_prefix, "Starting column of the path");
    dv.suffix.add_to(div_cmd, false);
    div_cmd->add_option("--out", dv.out, "Output CSV ('-' for stdout)");
    add_common(div_cmd, dv.seed);

    EvalOptions ev;
    CLI::App *eval_cmd = app.add_subcommand("eval", "Score existing hypotheses");
    eval_cmd->add_option("--hyp", ev.hyp, "Hypothesis file")->required();
    eval_cmd->add_option("--ref", ev.ref, "Reference file")->required();
    eval_cmd->add_option("--src", ev.src, "Source file")->required();
    eval_cmd->add_option("--delays", ev.delays, "Delays file")->required();
    eval_cmd->add_option("--align", ev.align, "Hypothesis-source alignment file (t-s pairs)");
    eval_cmd->add_option("--hallucination", ev.hallucination, "none or lexical (ignored with --align)");
    eval_cmd->add_option("--label-policy", ev.label_policy, "Value for the policy column");
    eval_cmd->add_option("--label-value", ev.label_value, "Value for the lambda_or_k column");
    eval_cmd->add_option("--label-suffix", ev.label_suffix, "Value for the suffix column");
    eval_cmd->add_option("--label-r-max", ev.label_r_max, "Value for the r_max column");
    eval_cmd->add_option("--out", ev.out, "Output CSV ('-' for stdout)");
    add_common(eval_cmd, ev.seed);

    try {
        const std::vector<std::string> args = expand_config(raw_args);
        std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
        app.parse(reversed);
    } catch (const CLI::ParseError &e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const ConfigError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (gen_cmd->parsed()) {
            return run_gen(*gen_cmd, gen);
        }
        if (train_cmd->parsed()) {
            return run_train(*train_cmd, tr);
        }
        if (sim_cmd->parsed()) {
            return run_simulate(*sim_cmd, sim);
        }
        if (sweep_cmd->parsed()) {
            return run_sweep_cmd(*sweep_cmd, sw);
        }
        if (div_cmd->parsed()) {
            return run_divergence(*div_cmd, dv);
        }
        if (eval_cmd->parsed()) {
            return run_eval(*eval_cmd, ev);
        }
    } catch (const ConfigError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

} // namespace simt::harness
