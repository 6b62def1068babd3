#include "simt/harness/synthetic.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <random>

#include "simt/error.hpp"

namespace simt::harness {

std::string to_string(SyntheticKind kind) {
    switch (kind) {
    case SyntheticKind::Copy:
        return "copy";
    case SyntheticKind::LocalSwap:
        return "local-swap";
    case SyntheticKind::TailFirst:
        return "tail-first";
    }
    return "?";
}

SyntheticKind parse_synthetic_kind(const std::string &text) {
    if (text == "copy") {
        return SyntheticKind::Copy;
    }
    if (text == "local-swap") {
        return SyntheticKind::LocalSwap;
    }
    if (text == "tail-first") {
        return SyntheticKind::TailFirst;
    }
    throw ConfigError("unknown language '" + text + "' (expected copy, local-swap or tail-first)");
}

void SyntheticSpec::validate() const {
    if (vocab_size < 4) {
        throw ConfigError("synthetic vocab_size must be >= 4");
    }
    if (min_len < 2 || max_len < min_len) {
        throw ConfigError("synthetic lengths need 2 <= min_len <= max_len");
    }
    if (n_pairs < 1) {
        throw ConfigError("synthetic n_pairs must be >= 1");
    }
    if (kind == SyntheticKind::LocalSwap && window < 2) {
        throw ConfigError("local-swap window must be >= 2");
    }
}

SentencePair make_synthetic_pair(SyntheticKind kind, int window, const TokenSeq &content, TokenId eos) {
    const int len = static_cast<int>(content.size());
    // order[t] = 1-based source position copied to target position t + 1
    std::vector<int> order(static_cast<std::size_t>(len));
    std::iota(order.begin(), order.end(), 1);
    switch (kind) {
    case SyntheticKind::Copy:
        break;
    case SyntheticKind::LocalSwap:
        for (int start = 0; start < len; start += window) {
            const int end = std::min(len, start + window);
            std::reverse(order.begin() + start, order.begin() + end);
        }
        break;
    case SyntheticKind::TailFirst:
        std::rotate(order.begin(), order.end() - 1, order.end());
        break;
    }

    SentencePair pair;
    pair.source = content;
    pair.source.push_back(eos);
    Alignment links;
    for (int t = 0; t < len; ++t) {
        pair.target.push_back(content[static_cast<std::size_t>(order[static_cast<std::size_t>(t)] - 1)]);
        links.push_back({t + 1, order[static_cast<std::size_t>(t)]});
    }
    pair.target.push_back(eos);
    links.push_back({len + 1, len + 1});
    pair.gold_alignment = std::move(links);
    return pair;
}

Distribution plausible_uniform(const Vocabulary &vocab) {
    std::vector<TokenId> support;
    for (std::size_t id = 0; id < vocab.size(); ++id) {
        const auto tok = static_cast<TokenId>(id);
        if (tok == vocab.eos() || !vocab.is_special(tok)) {
            support.push_back(tok);
        }
    }
    return Distribution::uniform_over(vocab.size(), support);
}

models::TableModel exact_table_model(const Vocabulary &vocab, const std::vector<SentencePair> &pairs) {
    // nullopt marks an undetermined context, which overrides any delta claim
    std::map<models::TableModel::Key, std::optional<TokenId>> cells;
    for (const auto &pair : pairs) {
        if (!pair.gold_alignment) {
            throw ValidationError("exact_table_model: pair without gold alignment");
        }
        std::vector<int> needed(pair.target.size() + 1, 0);
        for (const auto &link : *pair.gold_alignment) {
            auto &slot = needed[static_cast<std::size_t>(link.target)];
            slot = std::max(slot, link.source);
        }
        const int n = static_cast<int>(pair.source.size());
        for (std::size_t t = 1; t <= pair.target.size(); ++t) {
            TokenSeq prefix(pair.target.begin(), pair.target.begin() + static_cast<long>(t) - 1);
            for (int j = 1; j <= n; ++j) {
                std::optional<TokenId> value;
                if (needed[t] <= j) {
                    value = pair.target[t - 1];
                }
                models::TableModel::Key key{TokenSeq(pair.source.begin(), pair.source.begin() + j), prefix};
                auto [it, inserted] = cells.try_emplace(std::move(key), value);
                if (!inserted && it->second != value) {
                    it->second.reset();
                }
            }
        }
    }
    models::TableModel model(plausible_uniform(vocab), {});
    for (const auto &[key, value] : cells) {
        if (value) {
            model.set_entry(key.first, key.second, Distribution::delta(vocab.size(), *value));
        }
    }
    return model;
}

SyntheticCorpus generate_corpus(const SyntheticSpec &spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::uniform_int_distribution<int> length(spec.min_len, spec.max_len);
    std::uniform_int_distribution<int> word(0, spec.vocab_size - 1);

    constexpr TokenId kFirstWord = 3;
    const SpecialTokens specials;
    std::vector<TokenSeq> contents;
    std::vector<long> counts(static_cast<std::size_t>(spec.vocab_size), 0);
    for (int i = 0; i < spec.n_pairs; ++i) {
        TokenSeq content(static_cast<std::size_t>(length(rng)));
        for (auto &tok : content) {
            const int w = word(rng);
            tok = kFirstWord + w;
            // each word occurs once on each side
            counts[static_cast<std::size_t>(w)] += 2;
        }
        contents.push_back(std::move(content));
    }

    std::vector<std::string> tokens = {specials.bos, specials.eos, specials.unk};
    for (int w = 0; w < spec.vocab_size; ++w) {
        tokens.push_back("w" + std::to_string(w));
    }
    std::vector<int> by_count(static_cast<std::size_t>(spec.vocab_size));
    std::iota(by_count.begin(), by_count.end(), 0);
    std::stable_sort(by_count.begin(), by_count.end(), [&](int a, int b) {
        return counts[static_cast<std::size_t>(a)] > counts[static_cast<std::size_t>(b)];
    });
    std::vector<int> ranks(tokens.size(), 0);
    for (std::size_t r = 0; r < by_count.size(); ++r) {
        ranks[static_cast<std::size_t>(kFirstWord + by_count[r])] = static_cast<int>(r) + 1;
    }
    Vocabulary vocab(std::move(tokens), specials, std::move(ranks));

    std::vector<SentencePair> pairs;
    pairs.reserve(contents.size());
    for (const auto &content : contents) {
        pairs.push_back(make_synthetic_pair(spec.kind, spec.window, content, vocab.eos()));
    }
    models::TableModel model = exact_table_model(vocab, pairs);
    return {std::move(vocab), std::move(pairs), std::move(model)};
}

} // namespace simt::harness
