#include "simt/harness/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "simt/error.hpp"
#include "simt/policy/waitk.hpp"

namespace simt::harness {

std::string to_string(PolicyKind kind) { return kind == PolicyKind::PsFuture ? "psfuture" : "waitk"; }

PolicyKind parse_policy_kind(const std::string &text) {
    if (text == "psfuture") {
        return PolicyKind::PsFuture;
    }
    if (text == "waitk") {
        return PolicyKind::Waitk;
    }
    throw ConfigError("unknown policy '" + text + "' (expected psfuture or waitk)");
}

void SweepSpec::validate() const {
    if (policy == PolicyKind::PsFuture) {
        if (lambdas.empty()) {
            throw ConfigError("sweep: lambda list is empty");
        }
        if (!std::is_sorted(lambdas.begin(), lambdas.end())) {
            throw ConfigError("sweep: lambda list must be sorted ascending");
        }
        if (suffixes.empty()) {
            throw ConfigError("sweep: suffix list is empty");
        }
        PolicyConfig cfg;
        cfg.r_max = r_max;
        cfg.initial_prefix = initial_prefix;
        cfg.max_target_len = max_target_len;
        for (double lambda : lambdas) {
            cfg.lambda = lambda;
            cfg.validate();
        }
    } else {
        if (ks.empty()) {
            throw ConfigError("sweep: k list is empty");
        }
        for (int k : ks) {
            if (k < 1) {
                throw ConfigError("sweep: k values must be >= 1");
            }
        }
        if (max_target_len < 1) {
            throw ConfigError("sweep: max_target_len must be >= 1");
        }
    }
    if (jobs < 1) {
        throw ConfigError("sweep: jobs must be >= 1");
    }
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)> &fn) {
    std::vector<std::exception_ptr> errors(n);
    auto worker = [&](std::size_t first, std::size_t stride) {
        for (std::size_t i = first; i < n; i += stride) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto threads = static_cast<std::size_t>(std::max(1, jobs));
    if (threads == 1 || n <= 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        const std::size_t count = std::min(threads, n);
        for (std::size_t w = 0; w < count; ++w) {
            pool.emplace_back(worker, w, count);
        }
        for (auto &th : pool) {
            th.join();
        }
    }
    for (const auto &e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

std::vector<policy::SimulationResult> run_psfuture(const models::TranslationModel &model, const Vocabulary &vocab,
                                                   const std::vector<TokenSeq> &sources, const PolicyConfig &cfg,
                                                   const policy::SuffixSpec &suffix, std::uint64_t seed,
                                                   int jobs) {
    suffix.validate(vocab);
    std::vector<policy::SimulationResult> results(sources.size());
    parallel_for(sources.size(), jobs, [&](std::size_t i) {
        try {
            policy::SuffixSource suffixes(suffix, vocab, policy::session_seed(seed, i));
            results[i] = policy::simulate_sentence(model, cfg, suffixes, sources[i], vocab.bos(), vocab.eos());
        } catch (const Error &e) {
            throw Error("sentence " + std::to_string(i + 1) + ": " + e.what());
        }
    });
    return results;
}

std::vector<metrics::SentenceOutput> run_waitk(const models::TranslationModel &model, const Vocabulary &vocab,
                                               const std::vector<TokenSeq> &sources, int k, int max_target_len,
                                               int jobs) {
    std::vector<metrics::SentenceOutput> outputs(sources.size());
    parallel_for(sources.size(), jobs, [&](std::size_t i) {
        try {
            auto r = policy::simulate_waitk(model, k, sources[i], max_target_len, vocab.eos());
            outputs[i] = {std::move(r.hypothesis), std::move(r.g_record), static_cast<int>(sources[i].size())};
        } catch (const Error &e) {
            throw Error("sentence " + std::to_string(i + 1) + ": " + e.what());
        }
    });
    return outputs;
}

namespace {

metrics::EvalResult evaluate(const Vocabulary &vocab, const std::vector<SentencePair> &pairs,
                             const std::vector<metrics::SentenceOutput> &outputs, HallucinationMode mode) {
    std::vector<TokenSeq> refs;
    refs.reserve(pairs.size());
    for (const auto &p : pairs) {
        refs.push_back(p.target);
    }
    if (mode == HallucinationMode::None) {
        return metrics::evaluate_run(vocab, outputs, refs);
    }
    std::vector<Alignment> links;
    links.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        links.push_back(metrics::lexical_alignment(outputs[i].hypothesis, pairs[i].source, vocab.eos()));
    }
    return metrics::evaluate_run(vocab, outputs, refs, std::span<const Alignment>(links));
}

} // namespace

std::vector<SweepRow> run_sweep(const models::TranslationModel &model, const Vocabulary &vocab,
                                const std::vector<SentencePair> &pairs, const SweepSpec &spec) {
    spec.validate();
    if (pairs.empty()) {
        throw ValidationError("sweep: empty corpus");
    }
    for (const auto &suffix : spec.suffixes) {
        suffix.validate(vocab);
    }
    std::vector<TokenSeq> sources;
    sources.reserve(pairs.size());
    for (const auto &p : pairs) {
        sources.push_back(p.source);
    }
    const std::string r_max = spec.r_max ? std::to_string(*spec.r_max) : "none";

    std::vector<SweepRow> rows;
    if (spec.policy == PolicyKind::PsFuture) {
        for (double lambda : spec.lambdas) {
            for (const auto &suffix : spec.suffixes) {
                const std::string cell = "lambda=" + format_number(lambda) + " suffix=" + suffix.name;
                try {
                    PolicyConfig cfg;
                    cfg.lambda = lambda;
                    cfg.r_max = spec.r_max;
                    cfg.initial_prefix = spec.initial_prefix;
                    cfg.max_target_len = spec.max_target_len;
                    auto sims = run_psfuture(model, vocab, sources, cfg, suffix, spec.seed, spec.jobs);
                    std::vector<metrics::SentenceOutput> outputs;
                    outputs.reserve(sims.size());
                    for (std::size_t i = 0; i < sims.size(); ++i) {
                        outputs.push_back({std::move(sims[i].hypothesis), std::move(sims[i].g_record),
                                           static_cast<int>(sources[i].size())});
                    }
                    rows.push_back({"psfuture", format_number(lambda), suffix.name, r_max,
                                    evaluate(vocab, pairs, outputs, spec.hallucination), spec.seed});
                } catch (const Error &e) {
                    throw Error("sweep cell " + cell + ": " + e.what());
                }
            }
        }
    } else {
        for (int k : spec.ks) {
            try {
                auto outputs = run_waitk(model, vocab, sources, k, spec.max_target_len, spec.jobs);
                rows.push_back({"waitk", std::to_string(k), "-", "none",
                                evaluate(vocab, pairs, outputs, spec.hallucination), spec.seed});
            } catch (const Error &e) {
                throw Error("sweep cell k=" + std::to_string(k) + ": " + e.what());
            }
        }
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const SweepRow &a, const SweepRow &b) { return a.result.al < b.result.al; });
    return rows;
}

std::string format_number(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) {
        return "nan";
    }
    return std::string(buf, ptr);
}

namespace {

std::string fixed(double value, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, value);
    return buf;
}

std::string csv_field(const std::string &text) {
    if (text.find_first_of(",\"\n") == std::string::npos) {
        return text;
    }
    std::string out = "\"";
    for (char c : text) {
        out += c;
        if (c == '"') {
            out += '"';
        }
    }
    return out + '"';
}

} // namespace

std::string sweep_csv_header() { return "policy,lambda_or_k,suffix,r_max,al,bleu,hr,n_sentences,seed"; }

std::string sweep_csv_row(const SweepRow &row) {
    std::ostringstream out;
    out << row.policy << ',' << row.lambda_or_k << ',' << row.suffix << ',' << row.r_max << ','
        << fixed(row.result.al) << ',' << fixed(row.result.bleu) << ',';
    if (row.result.hallucination_rate) {
        out << fixed(*row.result.hallucination_rate);
    }
    out << ',' << row.result.n_sentences << ',' << row.seed;
    return out.str();
}

void emit_divergence_report(const models::TranslationModel &model, const Vocabulary &vocab,
                            const SentencePair &pair, const policy::SuffixSpec &suffix, std::uint64_t seed,
                            double lambda, int initial_prefix, std::ostream &out) {
    suffix.validate(vocab);
    policy::SuffixSource suffixes(suffix, vocab, policy::session_seed(seed, 0));
    const policy::DivergenceMatrix m = policy::divergence_matrix(model, pair, suffixes);
    const std::vector<int> path = policy::threshold_path(m, lambda, initial_prefix);

    out << "t,token";
    for (int g = 1; g <= m.cols; ++g) {
        out << ",g" << g;
    }
    out << ",path_g\n";
    for (int t = 1; t <= m.rows; ++t) {
        out << t << ',' << csv_field(vocab.token(pair.target[static_cast<std::size_t>(t - 1)]));
        for (int g = 1; g <= m.cols; ++g) {
            out << ',' << fixed(m.at(t, g));
        }
        out << ',' << path[static_cast<std::size_t>(t - 1)] << '\n';
    }
}

void emit_divergence_report(const models::TranslationModel &model, const Vocabulary &vocab,
                            const SentencePair &pair, const policy::SuffixSpec &suffix, std::uint64_t seed,
                            double lambda, int initial_prefix, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    emit_divergence_report(model, vocab, pair, suffix, seed, lambda, initial_prefix, out);
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

} // namespace simt::harness
