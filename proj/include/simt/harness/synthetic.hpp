#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simt/models/table_model.hpp"
#include "simt/types.hpp"
#include "simt/vocabulary.hpp"

namespace simt::harness {

enum class SyntheticKind { Copy, LocalSwap, TailFirst };

std::string to_string(SyntheticKind kind);
SyntheticKind parse_synthetic_kind(const std::string &text);

/// Lengths count content tokens; each sentence also ends with EOS.
struct SyntheticSpec {
    SyntheticKind kind = SyntheticKind::Copy;
    /// LOCAL_SWAP: each block of `window` content tokens is reversed.
    int window = 2;
    /// Number of content word types ("w0", "w1", ...).
    int vocab_size = 20;
    int min_len = 3;
    int max_len = 8;
    int n_pairs = 200;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticCorpus {
    Vocabulary vocab;
    std::vector<SentencePair> pairs;
    /// Exact kernel for the language: a delta on the reference token at every
    /// (x_<=j, y_<t) where the read source already fixes y_t, uniform over EOS
    /// and the content words elsewhere. Keys shared by pairs that disagree
    /// fall back to uniform. No backoff.
    models::TableModel model;
};

/// Target and alignment for one content sequence (EOS excluded).
SentencePair make_synthetic_pair(SyntheticKind kind, int window, const TokenSeq &content, TokenId eos);

/// The uniform distribution used for undetermined contexts.
Distribution plausible_uniform(const Vocabulary &vocab);

/// Exact table model for the given pairs, which must carry gold alignments.
models::TableModel exact_table_model(const Vocabulary &vocab, const std::vector<SentencePair> &pairs);

SyntheticCorpus generate_corpus(const SyntheticSpec &spec);

} // namespace simt::harness
