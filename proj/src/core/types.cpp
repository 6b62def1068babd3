#include "simt/types.hpp"

#include <cmath>
#include <string>

#include "simt/error.hpp"

namespace simt {

Distribution::Distribution(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) {
        throw ValidationError("distribution: empty probability vector");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
        const double p = probs_[i];
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw ValidationError("distribution: entry " + std::to_string(i) +
                                  " is negative or non-finite");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) {
        throw ValidationError("distribution: entries sum to " + std::to_string(sum));
    }
}

Distribution Distribution::uniform(std::size_t size) {
    return Distribution(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

Distribution Distribution::delta(std::size_t size, TokenId id) {
    if (id < 0 || static_cast<std::size_t>(id) >= size) {
        throw ValidationError("distribution: delta id out of range");
    }
    std::vector<double> probs(size, 0.0);
    probs[static_cast<std::size_t>(id)] = 1.0;
    return Distribution(std::move(probs));
}

Distribution Distribution::uniform_over(std::size_t size, std::span<const TokenId> support) {
    if (support.empty()) {
        throw ValidationError("distribution: empty support");
    }
    std::vector<double> probs(size, 0.0);
    const double mass = 1.0 / static_cast<double>(support.size());
    for (TokenId id : support) {
        if (id < 0 || static_cast<std::size_t>(id) >= size) {
            throw ValidationError("distribution: support id out of range");
        }
        probs[static_cast<std::size_t>(id)] = mass;
    }
    return Distribution(std::move(probs));
}

TokenId Distribution::argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs_.size(); ++i) {
        if (probs_[i] > probs_[best]) {
            best = i;
        }
    }
    return static_cast<TokenId>(best);
}

void PolicyConfig::validate() const {
    if (!(lambda == lambda)) {
        throw ConfigError("policy: lambda is NaN");
    }
    if (r_max && *r_max < 1) {
        throw ConfigError("policy: r_max must be positive");
    }
    if (initial_prefix < 1) {
        throw ConfigError("policy: initial_prefix must be >= 1");
    }
    if (max_target_len < 1) {
        throw ConfigError("policy: max_target_len must be >= 1");
    }
}

} // namespace simt
