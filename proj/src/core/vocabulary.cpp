#include "simt/vocabulary.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>

#include "simt/error.hpp"

namespace simt {

Vocabulary::Vocabulary(std::vector<std::string> tokens, SpecialTokens specials,
                       std::vector<int> freq_rank)
    : tokens_(std::move(tokens)), specials_(std::move(specials)), freq_rank_(std::move(freq_rank)) {
    if (specials_.bos == specials_.eos || specials_.bos == specials_.unk ||
        specials_.eos == specials_.unk) {
        throw ConfigError("vocabulary: special tokens must be distinct");
    }
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        auto [it, inserted] = id_of_.emplace(tokens_[i], static_cast<TokenId>(i));
        if (!inserted) {
            throw ConfigError("vocabulary: duplicate token '" + tokens_[i] + "'");
        }
    }
    auto require = [&](const std::string &tok) {
        auto it = id_of_.find(tok);
        if (it == id_of_.end()) {
            throw ConfigError("vocabulary: special token '" + tok + "' missing");
        }
        return it->second;
    };
    bos_ = require(specials_.bos);
    eos_ = require(specials_.eos);
    unk_ = require(specials_.unk);

    if (freq_rank_.empty()) {
        freq_rank_.assign(tokens_.size(), 0);
    }
    if (freq_rank_.size() != tokens_.size()) {
        throw ConfigError("vocabulary: freq_rank length differs from token count");
    }
    std::vector<std::pair<int, TokenId>> ranked;
    for (std::size_t i = 0; i < freq_rank_.size(); ++i) {
        if (freq_rank_[i] < 0) {
            throw ConfigError("vocabulary: negative frequency rank");
        }
        if (freq_rank_[i] > 0) {
            ranked.emplace_back(freq_rank_[i], static_cast<TokenId>(i));
        }
    }
    std::sort(ranked.begin(), ranked.end());
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (ranked[i].first != static_cast<int>(i) + 1) {
            throw ConfigError("vocabulary: frequency ranks must be a bijection onto 1..n");
        }
        ranked_by_rank_.push_back(ranked[i].second);
    }
}

const std::string &Vocabulary::token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
        throw ValidationError("vocabulary: id " + std::to_string(id) + " out of range");
    }
    return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
    auto it = id_of_.find(std::string(token));
    if (it == id_of_.end()) {
        return std::nullopt;
    }
    return it->second;
}

TokenId Vocabulary::id_or_unk(std::string_view token) const { return find(token).value_or(unk_); }

TokenSeq Vocabulary::encode_sentence(std::span<const std::string> words) const {
    TokenSeq ids;
    ids.reserve(words.size() + 1);
    for (const auto &w : words) {
        ids.push_back(id_or_unk(w));
    }
    ids.push_back(eos_);
    return ids;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
    std::string out;
    for (TokenId id : ids) {
        if (id == eos_) {
            break;
        }
        if (!out.empty()) {
            out += ' ';
        }
        out += token(id);
    }
    return out;
}

std::string Vocabulary::hash() const {
    std::uint64_t h = 14695981039346656037ULL;
    for (const auto &tok : tokens_) {
        for (unsigned char c : tok) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        h ^= static_cast<unsigned char>('\n');
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>> &corpus,
                            const SpecialTokens &specials) {
    if (corpus.empty()) {
        throw ConfigError("build_vocabulary: corpus is empty");
    }
    if (specials.bos == specials.eos || specials.bos == specials.unk ||
        specials.eos == specials.unk) {
        throw ConfigError("build_vocabulary: duplicate special tokens");
    }

    std::vector<std::string> tokens{specials.bos, specials.eos, specials.unk};
    std::unordered_map<std::string, std::size_t> index{{specials.bos, 0}, {specials.eos, 1},
                                                       {specials.unk, 2}};
    std::vector<long> counts(3, 0);
    // First corpus appearance per id; specials that never appear stay unranked.
    std::vector<std::size_t> first_seen(3, SIZE_MAX);
    std::size_t position = 0;
    for (const auto &sentence : corpus) {
        for (const auto &tok : sentence) {
            auto [it, inserted] = index.emplace(tok, tokens.size());
            if (inserted) {
                tokens.push_back(tok);
                counts.push_back(0);
                first_seen.push_back(position);
            }
            ++counts[it->second];
            first_seen[it->second] = std::min(first_seen[it->second], position);
            ++position;
        }
    }

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (counts[i] > 0) {
            order.push_back(i);
        }
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (counts[a] != counts[b]) {
            return counts[a] > counts[b];
        }
        return first_seen[a] < first_seen[b];
    });
    std::vector<int> rank(tokens.size(), 0);
    for (std::size_t r = 0; r < order.size(); ++r) {
        rank[order[r]] = static_cast<int>(r) + 1;
    }
    return Vocabulary(std::move(tokens), specials, std::move(rank));
}

namespace {

void check_side(const TokenSeq &seq, const Vocabulary &vocab, const char *side) {
    const std::string name(side);
    if (seq.empty()) {
        throw ValidationError(name + " side is empty");
    }
    if (seq.back() != vocab.eos()) {
        throw ValidationError(name + " side does not end with EOS");
    }
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const TokenId id = seq[i];
        if (id < 0 || static_cast<std::size_t>(id) >= vocab.size()) {
            throw ValidationError(name + " token id " + std::to_string(id) + " out of range");
        }
        if (id == vocab.eos() && i + 1 != seq.size()) {
            throw ValidationError(name + " side contains EOS before its end");
        }
    }
}

} // namespace

void validate_pair(const SentencePair &pair, const Vocabulary &vocab) {
    check_side(pair.source, vocab, "source");
    check_side(pair.target, vocab, "target");
    if (pair.gold_alignment) {
        const int n = static_cast<int>(pair.source.size());
        const int t = static_cast<int>(pair.target.size());
        for (const auto &link : *pair.gold_alignment) {
            if (link.target < 1 || link.target > t || link.source < 1 || link.source > n) {
                throw ValidationError("alignment link (" + std::to_string(link.target) + "," +
                                      std::to_string(link.source) + ") out of range");
            }
        }
    }
}

} // namespace simt
