#pragma once

#include <span>
#include <vector>

#include "simt/models/translation_model.hpp"
#include "simt/types.hpp"

namespace simt::policy {

/// Source tokens read before target token t under wait-k: min(t + k - 1, N).
int waitk_g(int t, int k, int source_len);

struct WaitkResult {
    TokenSeq hypothesis;
    std::vector<int> g_record;
    bool truncated = false;
};

/// Greedy wait-k decoding: target step t sees the first waitk_g(t, k, N)
/// source tokens. Stops at EOS or after `max_target_len` tokens.
WaitkResult simulate_waitk(const models::TranslationModel &model, int k, std::span<const TokenId> source,
                           int max_target_len, TokenId eos);

} // namespace simt::policy
