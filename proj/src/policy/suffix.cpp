#include "simt/policy/suffix.hpp"

#include "simt/corpus_io.hpp"
#include "simt/error.hpp"

namespace simt::policy {

void SuffixSpec::validate(const Vocabulary &vocab) const {
    if (const auto *fixed = std::get_if<FixedSuffix>(&variant)) {
        if (fixed->tokens.empty() || fixed->tokens.back() != vocab.eos()) {
            throw ConfigError("suffix '" + name + "': fixed suffix must end with EOS");
        }
        for (TokenId id : fixed->tokens) {
            if (id < 0 || static_cast<std::size_t>(id) >= vocab.size()) {
                throw ConfigError("suffix '" + name + "': token id out of range");
            }
        }
    } else if (const auto *random = std::get_if<RandomSuffix>(&variant)) {
        if (random->count < 1) {
            throw ConfigError("suffix '" + name + "': random count must be >= 1");
        }
        if (random->top_k < 1 || static_cast<std::size_t>(random->top_k) > vocab.ranked_count()) {
            throw ConfigError("suffix '" + name + "': top_k=" + std::to_string(random->top_k) +
                              " exceeds the " + std::to_string(vocab.ranked_count()) +
                              " ranked vocabulary tokens");
        }
    } else if (const auto *external = std::get_if<ExternalSuffix>(&variant)) {
        if (!external->provider) {
            throw ConfigError("suffix '" + name + "': external provider is empty");
        }
    }
}

SuffixSpec fixed_suffix(TokenSeq tokens, std::string name) {
    return SuffixSpec{FixedSuffix{std::move(tokens)}, std::move(name)};
}

SuffixSpec named_suffix(const std::string &name, const Vocabulary &vocab, const RandomSuffix &random) {
    if (name == "eos") {
        return fixed_suffix({vocab.eos()}, name);
    }
    if (name == "unk-eos") {
        return fixed_suffix({vocab.unk(), vocab.eos()}, name);
    }
    if (name == "ellipsis-eos") {
        return fixed_suffix({vocab.id_or_unk("..."), vocab.eos()}, name);
    }
    if (name == "random") {
        return SuffixSpec{random, name};
    }
    if (name == "oracle") {
        return SuffixSpec{OracleSuffix{}, name};
    }
    throw ConfigError("unknown suffix '" + name +
                      "' (expected eos, unk-eos, ellipsis-eos, random, oracle)");
}

SuffixSpec custom_suffix(const std::string &tokens, const Vocabulary &vocab) {
    TokenSeq ids;
    for (const auto &word : split_tokens(tokens)) {
        ids.push_back(vocab.id_or_unk(word));
    }
    if (ids.empty() || ids.back() != vocab.eos()) {
        ids.push_back(vocab.eos());
    }
    return fixed_suffix(std::move(ids), "custom");
}

TokenSeq make_suffix(const SuffixSpec &spec, const Vocabulary &vocab, std::mt19937_64 &rng,
                     std::optional<std::span<const TokenId>> full_source, int j) {
    return std::visit(
        [&](const auto &v) -> TokenSeq {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, FixedSuffix>) {
                return v.tokens;
            } else if constexpr (std::is_same_v<V, RandomSuffix>) {
                const auto &ranked = vocab.ranked_ids();
                if (v.top_k < 1 || static_cast<std::size_t>(v.top_k) > ranked.size()) {
                    throw ConfigError("random suffix: top_k exceeds ranked vocabulary");
                }
                std::uniform_int_distribution<int> pick(0, v.top_k - 1);
                TokenSeq out;
                out.reserve(static_cast<std::size_t>(v.count));
                for (int i = 0; i < v.count; ++i) {
                    out.push_back(ranked[static_cast<std::size_t>(pick(rng))]);
                }
                return out;
            } else if constexpr (std::is_same_v<V, OracleSuffix>) {
                if (!full_source) {
                    throw ConfigError("oracle suffix: full source not available");
                }
                const auto n = static_cast<int>(full_source->size());
                if (j < 0 || j >= n) {
                    throw ConfigError("oracle suffix: no continuation after j=" + std::to_string(j));
                }
                return TokenSeq(full_source->begin() + j, full_source->end());
            } else {
                std::string prefix;
                if (full_source) {
                    prefix = vocab.decode(full_source->first(static_cast<std::size_t>(j)));
                }
                const auto words = v.provider(prefix, vocab);
                if (words.empty()) {
                    throw ValidationError("external suffix provider returned an empty sequence");
                }
                TokenSeq out;
                for (const auto &w : words) {
                    out.push_back(vocab.id_or_unk(w));
                }
                if (out.back() != vocab.eos()) {
                    throw ValidationError("external suffix provider result does not end with EOS");
                }
                return out;
            }
        },
        spec.variant);
}

SuffixSource::SuffixSource(const SuffixSpec &spec, const Vocabulary &vocab, std::uint64_t seed)
    : spec_(spec), vocab_(vocab), rng_(seed) {
    if (const auto *random = std::get_if<RandomSuffix>(&spec.variant)) {
        rng_.seed(session_seed(random->seed, seed));
    }
}

TokenSeq SuffixSource::next(std::span<const TokenId> full_source, int j) {
    return make_suffix(spec_, vocab_, rng_, full_source, j);
}

std::uint64_t session_seed(std::uint64_t run_seed, std::uint64_t index) {
    // splitmix64 finaliser over the combined words
    std::uint64_t z = run_seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace simt::policy
