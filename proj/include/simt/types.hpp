#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace simt {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

/// One alignment link, both indices 1-based: (target_index, source_index).
struct AlignLink {
    int target = 0;
    int source = 0;

    friend auto operator<=>(const AlignLink &, const AlignLink &) = default;
};

using Alignment = std::vector<AlignLink>;

/// A parallel sentence. Both sides end with exactly one EOS.
struct SentencePair {
    TokenSeq source;
    TokenSeq target;
    std::optional<Alignment> gold_alignment;
};

/// Probability vector over the vocabulary.
///
/// Construction validates non-negativity and normalisation (|sum - 1| <= 1e-9),
/// so every live Distribution is a proper one.
class Distribution {
  public:
    static constexpr double kSumTolerance = 1e-9;

    explicit Distribution(std::vector<double> probs);

    static Distribution uniform(std::size_t size);
    static Distribution delta(std::size_t size, TokenId id);
    /// Uniform mass over `support`, zero elsewhere.
    static Distribution uniform_over(std::size_t size, std::span<const TokenId> support);

    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }
    const std::vector<double> &probs() const { return probs_; }

    /// Highest-probability id; ties resolve to the lowest id.
    TokenId argmax() const;

    friend bool operator==(const Distribution &, const Distribution &) = default;

  private:
    std::vector<double> probs_;
};

/// Configuration of the adaptive read/write policy.
struct PolicyConfig {
    double lambda = 0.2;
    /// Max continuous READs; nullopt means unbounded.
    std::optional<int> r_max;
    int initial_prefix = 2;
    int max_target_len = 256;

    void validate() const;
};

enum class DecisionKind { Read, Write };

class Decision {
  public:
    static Decision read() { return Decision(DecisionKind::Read, std::nullopt); }
    static Decision write(TokenId token) { return Decision(DecisionKind::Write, token); }

    DecisionKind kind() const { return kind_; }
    bool is_write() const { return kind_ == DecisionKind::Write; }
    /// Only meaningful for writes.
    TokenId token() const { return *token_; }

  private:
    Decision(DecisionKind kind, std::optional<TokenId> token) : kind_(kind), token_(token) {}

    DecisionKind kind_;
    std::optional<TokenId> token_;
};

} // namespace simt
