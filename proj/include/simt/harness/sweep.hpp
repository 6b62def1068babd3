#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "simt/metrics/metrics.hpp"
#include "simt/models/translation_model.hpp"
#include "simt/policy/divergence.hpp"
#include "simt/policy/psfuture.hpp"
#include "simt/policy/suffix.hpp"
#include "simt/types.hpp"
#include "simt/vocabulary.hpp"

namespace simt::harness {

enum class PolicyKind { PsFuture, Waitk };

std::string to_string(PolicyKind kind);
PolicyKind parse_policy_kind(const std::string &text);

/// How hypothesis tokens are aligned for the hallucination rate. LEXICAL is
/// only meaningful for the synthetic languages, whose lexicon is the identity.
enum class HallucinationMode { None, Lexical };

struct SweepSpec {
    PolicyKind policy = PolicyKind::PsFuture;
    std::vector<double> lambdas;
    std::vector<policy::SuffixSpec> suffixes;
    std::vector<int> ks;
    std::optional<int> r_max;
    int initial_prefix = 2;
    int max_target_len = 256;
    std::uint64_t seed = 0;
    /// Worker threads per cell; results do not depend on it.
    int jobs = 1;
    HallucinationMode hallucination = HallucinationMode::None;

    void validate() const;
};

struct SweepRow {
    std::string policy;
    std::string lambda_or_k;
    std::string suffix;
    std::string r_max;
    metrics::EvalResult result;
    std::uint64_t seed = 0;
};

/// Runs `fn(i)` for i in [0, n) on `jobs` threads. Exceptions are rethrown
/// after all workers finish, lowest index first.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)> &fn);

/// PsFuture over every source. Sentence i draws suffixes from
/// session_seed(seed, i), so the result does not depend on `jobs`.
std::vector<policy::SimulationResult> run_psfuture(const models::TranslationModel &model, const Vocabulary &vocab,
                                                   const std::vector<TokenSeq> &sources, const PolicyConfig &cfg,
                                                   const policy::SuffixSpec &suffix, std::uint64_t seed,
                                                   int jobs = 1);

std::vector<metrics::SentenceOutput> run_waitk(const models::TranslationModel &model, const Vocabulary &vocab,
                                               const std::vector<TokenSeq> &sources, int k, int max_target_len,
                                               int jobs = 1);

/// One row per (lambda, suffix) or per k, sorted by AL (stable).
std::vector<SweepRow> run_sweep(const models::TranslationModel &model, const Vocabulary &vocab,
                                const std::vector<SentencePair> &pairs, const SweepSpec &spec);

/// Shortest decimal text that round-trips.
std::string format_number(double value);

std::string sweep_csv_header();
std::string sweep_csv_row(const SweepRow &row);

/// Teacher-forced divergence matrix as CSV, one row per reference token:
/// t,token,g1..gN,path_g where path_g is the thresholded staircase for lambda.
void emit_divergence_report(const models::TranslationModel &model, const Vocabulary &vocab,
                            const SentencePair &pair, const policy::SuffixSpec &suffix, std::uint64_t seed,
                            double lambda, int initial_prefix, std::ostream &out);
void emit_divergence_report(const models::TranslationModel &model, const Vocabulary &vocab,
                            const SentencePair &pair, const policy::SuffixSpec &suffix, std::uint64_t seed,
                            double lambda, int initial_prefix, const std::filesystem::path &path);

} // namespace simt::harness
