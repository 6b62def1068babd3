#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "simt/types.hpp"
#include "simt/vocabulary.hpp"

namespace simt::policy {

/// Callback producing pseudo-future token strings for a source prefix, given
/// as space-joined text. Strings outside the vocabulary map to UNK.
using ExternalSuffixProvider =
    std::function<std::vector<std::string>(const std::string &source_prefix, const Vocabulary &vocab)>;

struct FixedSuffix {
    TokenSeq tokens;
};

/// `count` ids drawn i.i.d. from the `top_k` most frequent tokens, fresh on
/// every call.
struct RandomSuffix {
    int count = 4;
    int top_k = 200;
    std::uint64_t seed = 0;
};

/// The true continuation x_{j+1..N}.
struct OracleSuffix {};

struct ExternalSuffix {
    ExternalSuffixProvider provider;
};

struct SuffixSpec {
    std::variant<FixedSuffix, RandomSuffix, OracleSuffix, ExternalSuffix> variant;
    /// Short label used in reports ("eos", "random", ...).
    std::string name;

    bool is_oracle() const { return std::holds_alternative<OracleSuffix>(variant); }
    /// Throws ConfigError if the spec is unusable with `vocab`.
    void validate(const Vocabulary &vocab) const;
};

SuffixSpec fixed_suffix(TokenSeq tokens, std::string name = "fixed");

/// Resolves the named catalog ("eos", "unk-eos", "ellipsis-eos", "random",
/// "oracle"). Throws ConfigError for unknown names.
SuffixSpec named_suffix(const std::string &name, const Vocabulary &vocab, const RandomSuffix &random = {});

/// Parses a space-separated token string into a fixed suffix, appending EOS
/// when missing.
SuffixSpec custom_suffix(const std::string &tokens, const Vocabulary &vocab);

/// Produces one pseudo-future suffix. `rng` is only consumed by RANDOM.
/// ORACLE needs `full_source` and j < N.
TokenSeq make_suffix(const SuffixSpec &spec, const Vocabulary &vocab, std::mt19937_64 &rng,
                     std::optional<std::span<const TokenId>> full_source, int j);

/// Per-session suffix generator with its own seeded RNG.
class SuffixSource {
  public:
    SuffixSource(const SuffixSpec &spec, const Vocabulary &vocab, std::uint64_t session_seed);

    TokenSeq next(std::span<const TokenId> full_source, int j);
    const SuffixSpec &spec() const { return spec_; }

  private:
    const SuffixSpec &spec_;
    const Vocabulary &vocab_;
    std::mt19937_64 rng_;
};

/// Derives a per-session seed from a run seed and a sentence index, so serial
/// and parallel runs draw identical streams.
std::uint64_t session_seed(std::uint64_t run_seed, std::uint64_t index);

} // namespace simt::policy
