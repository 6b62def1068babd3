#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simt/types.hpp"
#include "simt/vocabulary.hpp"

namespace simt::metrics {

/// Average Lagging over one sentence.
///
///   AL = 1/tau * sum_{t=1..tau} [ g(t) - (t - 1) / gamma ],  gamma = T / N
///
/// where tau is the first t with g(t) = N (or |g| if the source is never fully
/// read) and T is the hypothesis length, EOS included. Throws ValidationError
/// on an empty or non-monotone record, or entries outside [1, N].
double average_lagging(std::span<const int> g_record, int source_len, int target_len);

/// Case-insensitive corpus BLEU-4 in [0, 100]: clipped n-gram precisions
/// aggregated over the corpus, geometric mean, brevity penalty, no smoothing.
/// Returns 0 when any corpus-level precision is zero.
double corpus_bleu(const std::vector<std::vector<std::string>> &hypotheses,
                   const std::vector<std::vector<std::string>> &references);

/// Id-sequence overload; EOS (and anything after it) is stripped first.
double corpus_bleu(const Vocabulary &vocab, std::span<const TokenSeq> hypotheses,
                   std::span<const TokenSeq> references);

struct HallucinationCount {
    std::size_t unaligned = 0;
    std::size_t total = 0;

    double rate() const { return total == 0 ? 0.0 : static_cast<double>(unaligned) / static_cast<double>(total); }
};

/// Hypothesis tokens (EOS excluded) that appear in no alignment link, over all
/// hypothesis tokens. `alignments[i]` links (hypothesis index, source index).
HallucinationCount hallucination_count(std::span<const TokenSeq> hypotheses,
                                       std::span<const Alignment> alignments, TokenId eos);
double hallucination_rate(std::span<const TokenSeq> hypotheses, std::span<const Alignment> alignments,
                          TokenId eos);

/// Alignment for synthetic languages whose translation lexicon is the
/// identity: hypothesis token i links to every source position with the same
/// id. EOS is never linked.
Alignment lexical_alignment(std::span<const TokenId> hypothesis, std::span<const TokenId> source, TokenId eos);

/// Output of one simultaneous decode.
struct SentenceOutput {
    TokenSeq hypothesis;
    std::vector<int> g_record;
    int source_len = 0;
};

struct EvalResult {
    double al = 0.0;
    double bleu = 0.0;
    std::optional<double> hallucination_rate;
    std::size_t n_sentences = 0;
    /// Sentences left out of AL because their hypothesis was empty.
    std::size_t al_excluded = 0;
};

/// AL averaged over sentences, BLEU at corpus level, hallucination rate
/// token-weighted at corpus level (only when alignments are given).
EvalResult evaluate_run(const Vocabulary &vocab, std::span<const SentenceOutput> outputs,
                        std::span<const TokenSeq> references,
                        std::optional<std::span<const Alignment>> alignments = std::nullopt);

} // namespace simt::metrics
