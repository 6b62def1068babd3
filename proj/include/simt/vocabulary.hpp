#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "simt/types.hpp"

namespace simt {

struct SpecialTokens {
    std::string bos = "<bos>";
    std::string eos = "<eos>";
    std::string unk = "<unk>";
};

/// Dense token <-> id map. Specials occupy ids 0, 1, 2 (BOS, EOS, UNK); the
/// remaining tokens follow in first-occurrence order.
class Vocabulary {
  public:
    /// `freq_rank[id]` is 1 for the most frequent token, 0 for unranked ids.
    Vocabulary(std::vector<std::string> tokens, SpecialTokens specials,
               std::vector<int> freq_rank = {});

    std::size_t size() const { return tokens_.size(); }
    TokenId bos() const { return bos_; }
    TokenId eos() const { return eos_; }
    TokenId unk() const { return unk_; }
    const SpecialTokens &specials() const { return specials_; }

    const std::string &token(TokenId id) const;
    std::optional<TokenId> find(std::string_view token) const;
    /// OOV strings map to UNK.
    TokenId id_or_unk(std::string_view token) const;

    const std::vector<std::string> &tokens() const { return tokens_; }
    const std::vector<int> &freq_ranks() const { return freq_rank_; }
    int freq_rank(TokenId id) const { return freq_rank_[static_cast<std::size_t>(id)]; }
    std::size_t ranked_count() const { return ranked_by_rank_.size(); }
    /// Ids ordered by rank, most frequent first.
    const std::vector<TokenId> &ranked_ids() const { return ranked_by_rank_; }

    bool is_special(TokenId id) const { return id == bos_ || id == eos_ || id == unk_; }

    /// Token strings -> ids with EOS appended.
    TokenSeq encode_sentence(std::span<const std::string> words) const;
    /// Ids -> space-joined text, stopping at (and dropping) EOS.
    std::string decode(std::span<const TokenId> ids) const;

    /// FNV-1a over the token list, as 16 hex chars.
    std::string hash() const;

  private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> id_of_;
    SpecialTokens specials_;
    TokenId bos_ = 0;
    TokenId eos_ = 1;
    TokenId unk_ = 2;
    std::vector<int> freq_rank_;
    std::vector<TokenId> ranked_by_rank_;
};

/// Builds a vocabulary from tokenised sentences. Frequency ranks count corpus
/// occurrences; ties go to the token seen first.
Vocabulary build_vocabulary(const std::vector<std::vector<std::string>> &corpus,
                            const SpecialTokens &specials = {});

/// Throws ValidationError unless `pair` satisfies the SentencePair invariants
/// under `vocab`.
void validate_pair(const SentencePair &pair, const Vocabulary &vocab);

} // namespace simt
