#include "simt/metrics/metrics.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <iostream>
#include <map>

#include "simt/error.hpp"

namespace simt::metrics {

double average_lagging(std::span<const int> g_record, int source_len, int target_len) {
    if (g_record.empty()) {
        throw ValidationError("average_lagging: empty hypothesis");
    }
    if (source_len < 1 || target_len < 1) {
        throw ValidationError("average_lagging: lengths must be >= 1");
    }
    int prev = 0;
    for (int g : g_record) {
        if (g < 1 || g > source_len) {
            throw ValidationError("average_lagging: delay " + std::to_string(g) + " outside [1, N]");
        }
        if (g < prev) {
            throw ValidationError("average_lagging: delays are not monotone");
        }
        prev = g;
    }
    const double gamma = static_cast<double>(target_len) / static_cast<double>(source_len);
    std::size_t tau = g_record.size();
    for (std::size_t t = 0; t < g_record.size(); ++t) {
        if (g_record[t] == source_len) {
            tau = t + 1;
            break;
        }
    }
    double sum = 0.0;
    for (std::size_t t = 0; t < tau; ++t) {
        sum += static_cast<double>(g_record[t]) - static_cast<double>(t) / gamma;
    }
    return sum / static_cast<double>(tau);
}

namespace {

constexpr int kMaxOrder = 4;

std::string lowercase(const std::string &s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

using NgramCounts = std::map<std::vector<std::string>, int>;

NgramCounts count_ngrams(const std::vector<std::string> &words, int n) {
    NgramCounts counts;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= words.size(); ++i) {
        ++counts[std::vector<std::string>(words.begin() + static_cast<long>(i),
                                          words.begin() + static_cast<long>(i) + n)];
    }
    return counts;
}

std::vector<std::string> strip_to_words(const Vocabulary &vocab, const TokenSeq &seq) {
    std::vector<std::string> words;
    for (TokenId id : seq) {
        if (id == vocab.eos()) {
            break;
        }
        words.push_back(vocab.token(id));
    }
    return words;
}

} // namespace

double corpus_bleu(const std::vector<std::vector<std::string>> &hypotheses,
                   const std::vector<std::vector<std::string>> &references) {
    if (hypotheses.size() != references.size()) {
        throw ValidationError("corpus_bleu: " + std::to_string(hypotheses.size()) + " hypotheses but " +
                              std::to_string(references.size()) + " references");
    }
    std::array<long, kMaxOrder> matches{};
    std::array<long, kMaxOrder> totals{};
    long hyp_len = 0;
    long ref_len = 0;
    for (std::size_t s = 0; s < hypotheses.size(); ++s) {
        std::vector<std::string> hyp;
        std::vector<std::string> ref;
        for (const auto &w : hypotheses[s]) {
            hyp.push_back(lowercase(w));
        }
        for (const auto &w : references[s]) {
            ref.push_back(lowercase(w));
        }
        hyp_len += static_cast<long>(hyp.size());
        ref_len += static_cast<long>(ref.size());
        for (int n = 1; n <= kMaxOrder; ++n) {
            const NgramCounts h = count_ngrams(hyp, n);
            const NgramCounts r = count_ngrams(ref, n);
            for (const auto &[gram, count] : h) {
                totals[n - 1] += count;
                if (auto it = r.find(gram); it != r.end()) {
                    matches[n - 1] += std::min(count, it->second);
                }
            }
        }
    }
    double log_precision = 0.0;
    for (int n = 0; n < kMaxOrder; ++n) {
        if (totals[n] == 0 || matches[n] == 0) {
            return 0.0;
        }
        log_precision += std::log(static_cast<double>(matches[n]) / static_cast<double>(totals[n]));
    }
    const double bp = hyp_len >= ref_len
                          ? 1.0
                          : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
    return 100.0 * bp * std::exp(log_precision / kMaxOrder);
}

double corpus_bleu(const Vocabulary &vocab, std::span<const TokenSeq> hypotheses,
                   std::span<const TokenSeq> references) {
    std::vector<std::vector<std::string>> hyp;
    std::vector<std::vector<std::string>> ref;
    for (const auto &h : hypotheses) {
        hyp.push_back(strip_to_words(vocab, h));
    }
    for (const auto &r : references) {
        ref.push_back(strip_to_words(vocab, r));
    }
    return corpus_bleu(hyp, ref);
}

HallucinationCount hallucination_count(std::span<const TokenSeq> hypotheses,
                                       std::span<const Alignment> alignments, TokenId eos) {
    if (hypotheses.size() != alignments.size()) {
        throw ValidationError("hallucination_rate: missing alignment for " +
                              std::to_string(hypotheses.size()) + " hypotheses (" +
                              std::to_string(alignments.size()) + " given)");
    }
    HallucinationCount count;
    for (std::size_t s = 0; s < hypotheses.size(); ++s) {
        std::vector<bool> aligned(hypotheses[s].size() + 1, false);
        for (const auto &link : alignments[s]) {
            if (link.target >= 1 && static_cast<std::size_t>(link.target) <= hypotheses[s].size()) {
                aligned[static_cast<std::size_t>(link.target)] = true;
            }
        }
        for (std::size_t i = 0; i < hypotheses[s].size(); ++i) {
            if (hypotheses[s][i] == eos) {
                continue;
            }
            ++count.total;
            if (!aligned[i + 1]) {
                ++count.unaligned;
            }
        }
    }
    return count;
}

double hallucination_rate(std::span<const TokenSeq> hypotheses, std::span<const Alignment> alignments,
                          TokenId eos) {
    return hallucination_count(hypotheses, alignments, eos).rate();
}

Alignment lexical_alignment(std::span<const TokenId> hypothesis, std::span<const TokenId> source, TokenId eos) {
    Alignment links;
    for (std::size_t i = 0; i < hypothesis.size(); ++i) {
        if (hypothesis[i] == eos) {
            continue;
        }
        for (std::size_t s = 0; s < source.size(); ++s) {
            if (source[s] == hypothesis[i]) {
                links.push_back({static_cast<int>(i) + 1, static_cast<int>(s) + 1});
            }
        }
    }
    return links;
}

EvalResult evaluate_run(const Vocabulary &vocab, std::span<const SentenceOutput> outputs,
                        std::span<const TokenSeq> references,
                        std::optional<std::span<const Alignment>> alignments) {
    if (outputs.empty()) {
        throw ValidationError("evaluate_run: empty corpus");
    }
    if (outputs.size() != references.size()) {
        throw ValidationError("evaluate_run: output and reference counts differ");
    }
    EvalResult result;
    result.n_sentences = outputs.size();

    double al_sum = 0.0;
    std::size_t al_count = 0;
    std::vector<TokenSeq> hyps;
    hyps.reserve(outputs.size());
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        const auto &out = outputs[i];
        hyps.push_back(out.hypothesis);
        if (out.hypothesis.empty() || out.g_record.empty()) {
            std::cerr << "warning: sentence " << i + 1 << " has an empty hypothesis; excluded from AL\n";
            ++result.al_excluded;
            continue;
        }
        al_sum += average_lagging(out.g_record, out.source_len, static_cast<int>(out.hypothesis.size()));
        ++al_count;
    }
    if (al_count == 0) {
        throw ValidationError("evaluate_run: no sentence has a non-empty hypothesis");
    }
    result.al = al_sum / static_cast<double>(al_count);
    result.bleu = corpus_bleu(vocab, hyps, references);
    if (alignments) {
        result.hallucination_rate = hallucination_rate(hyps, *alignments, vocab.eos());
    }
    return result;
}

} // namespace simt::metrics
