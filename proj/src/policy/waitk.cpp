#include "simt/policy/waitk.hpp"

#include <algorithm>

#include "simt/error.hpp"

namespace simt::policy {

int waitk_g(int t, int k, int source_len) {
    if (t < 1 || k < 1 || source_len < 1) {
        throw ValidationError("waitk_g: t, k and N must be >= 1");
    }
    return std::min(t + k - 1, source_len);
}

WaitkResult simulate_waitk(const models::TranslationModel &model, int k, std::span<const TokenId> source,
                           int max_target_len, TokenId eos) {
    if (k < 1) {
        throw ConfigError("wait-k: k must be >= 1");
    }
    if (max_target_len < 1) {
        throw ConfigError("wait-k: max_target_len must be >= 1");
    }
    if (source.empty() || source.back() != eos) {
        throw ValidationError("wait-k: source must end with EOS");
    }
    const int n = static_cast<int>(source.size());
    WaitkResult result;
    for (int t = 1;; ++t) {
        if (t > max_target_len) {
            result.truncated = true;
            break;
        }
        const int g = waitk_g(t, k, n);
        const TokenId y = model.next_dist(source.first(static_cast<std::size_t>(g)), result.hypothesis).argmax();
        result.hypothesis.push_back(y);
        result.g_record.push_back(g);
        if (y == eos) {
            break;
        }
    }
    return result;
}

} // namespace simt::policy
