#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "simt/models/translation_model.hpp"
#include "simt/policy/suffix.hpp"
#include "simt/types.hpp"

namespace simt::policy {

/// Why a WRITE was attempted.
enum class WriteReason { Threshold, RMax, Exhausted };

std::string_view to_string(WriteReason reason);

struct DecideOutcome {
    bool write = false;
    std::optional<WriteReason> reason;
};

/// Threshold rule with the continuous-read cap: write when the source is
/// exhausted, when r_c >= r_max, or when divergence <= lambda; read otherwise.
DecideOutcome decide(double divergence, const PolicyConfig &cfg, int continuous_reads, bool source_exhausted);

/// One policy step. `divergence` is absent when the write was forced
/// (RMAX/EXHAUSTED) and no divergence was computed.
struct TraceRecord {
    int step = 0;
    DecisionKind kind = DecisionKind::Read;
    int j = 0;
    std::optional<double> divergence;
    std::optional<WriteReason> reason;
    std::optional<TokenId> token;
    /// READ taken because the decoder proposed EOS before the source ended.
    bool eos_guard = false;
};

nlohmann::json to_json(const TraceRecord &record);

struct SimulationResult {
    TokenSeq hypothesis;
    std::vector<int> g_record;
    std::vector<TraceRecord> trace;
    /// max_target_len was reached before EOS.
    bool truncated = false;
};

/// Streams `source` (EOS-terminated) through the adaptive policy and decodes
/// greedily. A proposed EOS is only committed once the whole source is read;
/// otherwise that step becomes a READ.
SimulationResult simulate_sentence(const models::TranslationModel &model, const PolicyConfig &cfg,
                                   SuffixSource &suffixes, std::span<const TokenId> source, TokenId bos,
                                   TokenId eos);

} // namespace simt::policy
