#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "simt/models/micro_model.hpp"
#include "simt/models/translation_model.hpp"
#include "simt/types.hpp"
#include "simt/vocabulary.hpp"

namespace fixtures {

// Vocabulary {<bos>, <eos>, <unk>, a, b, c, ...} with ranks in listed order.
inline simt::Vocabulary letters(int n) {
    std::vector<std::string> tokens = {"<bos>", "<eos>", "<unk>"};
    std::vector<int> ranks = {0, 0, 0};
    for (int i = 0; i < n; ++i) {
        tokens.push_back(std::string(1, static_cast<char>('a' + i)));
        ranks.push_back(i + 1);
    }
    return simt::Vocabulary(tokens, {}, ranks);
}

// Deterministic pseudo-random kernel: every (source, target) context gets its
// own softmax of hashed logits.
class HashModel final : public simt::models::TranslationModel {
  public:
    HashModel(std::size_t vocab, std::uint64_t seed, double temperature = 1.0)
        : vocab_(vocab), seed_(seed), temperature_(temperature) {}

    simt::Distribution next_dist(std::span<const simt::TokenId> src,
                                 std::span<const simt::TokenId> tgt) const override {
        std::uint64_t h = seed_ ^ 0x9e3779b97f4a7c15ULL;
        auto mix = [&h](std::uint64_t v) {
            h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        };
        for (auto t : src) {
            mix(static_cast<std::uint64_t>(t) + 17);
        }
        mix(0xabcdefULL);
        for (auto t : tgt) {
            mix(static_cast<std::uint64_t>(t) + 31);
        }
        std::mt19937_64 rng(h);
        std::normal_distribution<double> logit(0.0, temperature_);
        std::vector<double> p(vocab_);
        double sum = 0;
        for (auto &v : p) {
            v = std::exp(logit(rng));
            sum += v;
        }
        for (auto &v : p) {
            v /= sum;
        }
        return simt::Distribution(std::move(p));
    }
    std::size_t vocab_size() const override { return vocab_; }

  private:
    std::size_t vocab_;
    std::uint64_t seed_;
    double temperature_;
};

// Ignores the source entirely.
class SourceBlindModel final : public simt::models::TranslationModel {
  public:
    SourceBlindModel(std::size_t vocab, simt::TokenId eos, std::size_t length)
        : vocab_(vocab), eos_(eos), length_(length) {}

    simt::Distribution next_dist(std::span<const simt::TokenId>,
                                 std::span<const simt::TokenId> tgt) const override {
        const simt::TokenId next = tgt.size() >= length_ ? eos_ : static_cast<simt::TokenId>(3 + tgt.size() % (vocab_ - 3));
        std::vector<double> p(vocab_, 0.1 / static_cast<double>(vocab_ - 1));
        p[static_cast<std::size_t>(next)] = 0.9;
        return simt::Distribution(std::move(p));
    }
    std::size_t vocab_size() const override { return vocab_; }

  private:
    std::size_t vocab_;
    simt::TokenId eos_;
    std::size_t length_;
};

inline std::vector<double> random_simplex(std::size_t n, std::mt19937_64 &rng, bool sparse = false) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p(n);
    double sum = 0;
    for (auto &v : p) {
        v = (sparse && u(rng) < 0.5) ? 0.0 : u(rng);
        sum += v;
    }
    if (sum == 0) {
        p[0] = sum = 1;
    }
    for (auto &v : p) {
        v /= sum;
    }
    return p;
}

inline simt::models::MicroConfig micro_config(std::size_t vocab, simt::models::EncoderMode mode, int d = 8,
                                              int max_len = 12) {
    simt::models::MicroConfig cfg;
    cfg.vocab_size = vocab;
    cfg.d = d;
    cfg.max_len = max_len;
    cfg.mode = mode;
    cfg.bos = 0;
    return cfg;
}

// Random EOS-terminated sentence over content ids [3, vocab).
inline simt::TokenSeq random_sentence(std::size_t vocab, int content_len, std::mt19937_64 &rng) {
    std::uniform_int_distribution<int> pick(3, static_cast<int>(vocab) - 1);
    simt::TokenSeq s;
    for (int i = 0; i < content_len; ++i) {
        s.push_back(pick(rng));
    }
    s.push_back(1);
    return s;
}

} // namespace fixtures
