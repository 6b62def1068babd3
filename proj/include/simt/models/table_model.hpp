#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "simt/models/translation_model.hpp"

namespace simt::models {

/// One step of the context-truncation schedule. A negative keep count leaves
/// that side untruncated; otherwise only the last `keep` tokens are kept.
struct BackoffLevel {
    int source_keep = -1;
    int target_keep = -1;

    friend bool operator==(const BackoffLevel &, const BackoffLevel &) = default;
};

/// Parses schedules such as "t2,t1,t0,s*". `tN` truncates the target context
/// with the full source; `sN` truncates the source with an empty target;
/// `s*` expands to s2,s1,s0.
std::vector<BackoffLevel> parse_backoff(std::string_view text);
std::string format_backoff(const std::vector<BackoffLevel> &levels);

inline constexpr std::string_view kDefaultBackoff = "t2,t1,t0,s*";

/// Exact lookup-table kernel with longest-match backoff.
///
/// Lookup tries the untruncated (source, target) key, then each level of the
/// backoff schedule in order, then falls back to the default distribution, so
/// every query resolves.
class TableModel final : public TranslationModel {
  public:
    using Key = std::pair<TokenSeq, TokenSeq>;

    struct Lookup {
        const Distribution *dist;
        /// 0 for an exact hit, 1 + schedule index for a backoff hit, -1 for the
        /// default.
        int level;
    };

    TableModel(Distribution default_dist,
               std::vector<BackoffLevel> backoff = parse_backoff(kDefaultBackoff));

    /// Inserts or replaces the entry for (source, target).
    void set_entry(TokenSeq source, TokenSeq target, Distribution dist);

    Lookup lookup(std::span<const TokenId> source, std::span<const TokenId> target) const;

    Distribution next_dist(std::span<const TokenId> source_prefix,
                           std::span<const TokenId> target_prefix) const override;
    std::size_t vocab_size() const override { return default_.size(); }

    const std::map<Key, Distribution> &entries() const { return entries_; }
    const Distribution &default_dist() const { return default_; }
    const std::vector<BackoffLevel> &backoff() const { return backoff_; }

  private:
    Distribution default_;
    std::vector<BackoffLevel> backoff_;
    std::map<Key, Distribution> entries_;
};

} // namespace simt::models
