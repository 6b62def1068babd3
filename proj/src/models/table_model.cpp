#include "simt/models/table_model.hpp"

#include <charconv>

#include "simt/error.hpp"

namespace simt::models {

std::vector<BackoffLevel> parse_backoff(std::string_view text) {
    std::vector<BackoffLevel> levels;
    if (text.empty()) {
        return levels;
    }
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string_view::npos) {
            comma = text.size();
        }
        const std::string_view item = text.substr(pos, comma - pos);
        pos = comma + 1;
        if (item.empty()) {
            throw FormatError("backoff: empty level in '" + std::string(text) + "'");
        }
        const char side = item[0];
        if (side != 's' && side != 't') {
            throw FormatError("backoff: unknown level '" + std::string(item) + "'");
        }
        if (item == "s*") {
            for (int keep : {2, 1, 0}) {
                levels.push_back({keep, 0});
            }
            continue;
        }
        int keep = 0;
        auto [ptr, ec] = std::from_chars(item.data() + 1, item.data() + item.size(), keep);
        if (ec != std::errc{} || ptr != item.data() + item.size() || keep < 0) {
            throw FormatError("backoff: unknown level '" + std::string(item) + "'");
        }
        levels.push_back(side == 't' ? BackoffLevel{-1, keep} : BackoffLevel{keep, 0});
    }
    return levels;
}

std::string format_backoff(const std::vector<BackoffLevel> &levels) {
    if (levels == parse_backoff(kDefaultBackoff)) {
        return std::string(kDefaultBackoff);
    }
    std::string out;
    for (const auto &level : levels) {
        if (!out.empty()) {
            out += ',';
        }
        if (level.source_keep < 0) {
            out += 't' + std::to_string(level.target_keep);
        } else {
            out += 's' + std::to_string(level.source_keep);
        }
    }
    return out;
}

TableModel::TableModel(Distribution default_dist, std::vector<BackoffLevel> backoff)
    : default_(std::move(default_dist)), backoff_(std::move(backoff)) {}

void TableModel::set_entry(TokenSeq source, TokenSeq target, Distribution dist) {
    if (dist.size() != default_.size()) {
        throw ValidationError("table: entry distribution size differs from vocabulary size");
    }
    entries_.insert_or_assign(Key{std::move(source), std::move(target)}, std::move(dist));
}

namespace {

TokenSeq keep_last(std::span<const TokenId> seq, int keep) {
    if (keep < 0 || static_cast<std::size_t>(keep) >= seq.size()) {
        return TokenSeq(seq.begin(), seq.end());
    }
    return TokenSeq(seq.end() - keep, seq.end());
}

} // namespace

TableModel::Lookup TableModel::lookup(std::span<const TokenId> source,
                                      std::span<const TokenId> target) const {
    Key key{TokenSeq(source.begin(), source.end()), TokenSeq(target.begin(), target.end())};
    if (auto it = entries_.find(key); it != entries_.end()) {
        return {&it->second, 0};
    }
    for (std::size_t i = 0; i < backoff_.size(); ++i) {
        key.first = keep_last(source, backoff_[i].source_keep);
        key.second = keep_last(target, backoff_[i].target_keep);
        if (auto it = entries_.find(key); it != entries_.end()) {
            return {&it->second, static_cast<int>(i) + 1};
        }
    }
    return {&default_, -1};
}

Distribution TableModel::next_dist(std::span<const TokenId> source_prefix,
                                   std::span<const TokenId> target_prefix) const {
    return *lookup(source_prefix, target_prefix).dist;
}

} // namespace simt::models
