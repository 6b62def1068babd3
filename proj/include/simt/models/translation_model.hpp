#pragma once

#include <span>

#include "simt/types.hpp"

namespace simt::models {

/// Conditional next-token kernel p(y_t | source prefix, target prefix).
///
/// `target_prefix` holds real target tokens only (no BOS). Implementations are
/// deterministic and safe to call concurrently once constructed.
class TranslationModel {
  public:
    virtual ~TranslationModel() = default;

    virtual Distribution next_dist(std::span<const TokenId> source_prefix,
                                   std::span<const TokenId> target_prefix) const = 0;
    virtual std::size_t vocab_size() const = 0;
};

} // namespace simt::models
