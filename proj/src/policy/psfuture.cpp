#include "simt/policy/psfuture.hpp"

#include "simt/error.hpp"
#include "simt/policy/divergence.hpp"
#include "simt/stream_state.hpp"

namespace simt::policy {

std::string_view to_string(WriteReason reason) {
    switch (reason) {
    case WriteReason::Threshold:
        return "THRESHOLD";
    case WriteReason::RMax:
        return "RMAX";
    case WriteReason::Exhausted:
        return "EXHAUSTED";
    }
    return "?";
}

DecideOutcome decide(double divergence, const PolicyConfig &cfg, int continuous_reads, bool source_exhausted) {
    if (source_exhausted) {
        return {true, WriteReason::Exhausted};
    }
    if (cfg.r_max && continuous_reads >= *cfg.r_max) {
        return {true, WriteReason::RMax};
    }
    if (divergence <= cfg.lambda) {
        return {true, WriteReason::Threshold};
    }
    return {false, std::nullopt};
}

nlohmann::json to_json(const TraceRecord &record) {
    nlohmann::json j = {{"step", record.step},
                        {"kind", record.kind == DecisionKind::Write ? "W" : "R"},
                        {"j", record.j}};
    if (record.divergence) {
        j["divergence"] = *record.divergence;
    }
    if (record.reason) {
        j["reason"] = std::string(to_string(*record.reason));
    }
    if (record.token) {
        j["token"] = *record.token;
    }
    if (record.eos_guard) {
        j["guard"] = "EOS";
    }
    return j;
}

SimulationResult simulate_sentence(const models::TranslationModel &model, const PolicyConfig &cfg,
                                   SuffixSource &suffixes, std::span<const TokenId> source, TokenId bos,
                                   TokenId eos) {
    cfg.validate();
    if (source.empty() || source.back() != eos) {
        throw ValidationError("simulate_sentence: source must end with EOS");
    }
    const int n = static_cast<int>(source.size());
    StreamState state(n, cfg.initial_prefix, bos);
    SimulationResult result;
    int step = 0;

    while (state.emitted().back() != eos) {
        if (static_cast<int>(state.writes()) >= cfg.max_target_len) {
            result.truncated = true;
            break;
        }
        TraceRecord rec;
        rec.step = step++;
        rec.j = state.j();

        const auto source_prefix = source.first(static_cast<std::size_t>(state.j()));
        const auto target_prefix = state.target_prefix();

        // Forced writes skip the divergence computation; decide() still owns
        // the rule and its precedence.
        double divergence = 0.0;
        const bool forced =
            state.source_exhausted() || (cfg.r_max && state.continuous_reads() >= *cfg.r_max);
        if (!forced) {
            const TokenSeq suffix = suffixes.next(source, state.j());
            divergence = psfuture_divergence(model, source_prefix, target_prefix, suffix);
            rec.divergence = divergence;
        }
        const DecideOutcome outcome =
            decide(divergence, cfg, state.continuous_reads(), state.source_exhausted());

        if (outcome.write) {
            const TokenId y = model.next_dist(source_prefix, target_prefix).argmax();
            if (y != eos || state.source_exhausted()) {
                rec.kind = DecisionKind::Write;
                rec.reason = outcome.reason;
                rec.token = y;
                state.write(y);
                result.trace.push_back(rec);
                continue;
            }
            rec.eos_guard = true;
        }
        rec.kind = DecisionKind::Read;
        state.read();
        result.trace.push_back(rec);
    }

    result.hypothesis.assign(state.target_prefix().begin(), state.target_prefix().end());
    result.g_record = state.g_record();
    return result;
}

} // namespace simt::policy
