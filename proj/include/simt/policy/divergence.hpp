#pragma once

#include <span>
#include <vector>

#include "simt/models/translation_model.hpp"
#include "simt/policy/suffix.hpp"
#include "simt/types.hpp"

namespace simt::policy {

/// Cosine distance 1 - p.q / (|p| |q|), clamped to [0, 1]. Exactly symmetric.
double cosine_divergence(const Distribution &p, const Distribution &q);

/// Distance between the next-token distribution on the bare source prefix and
/// on the prefix extended with `suffix`.
double psfuture_divergence(const models::TranslationModel &model, std::span<const TokenId> source_prefix,
                           std::span<const TokenId> target_prefix, std::span<const TokenId> suffix);

/// T x N matrix; cell (t, g) holds the divergence for reference prefix y_<t
/// and source prefix x_<=g (both 1-based).
struct DivergenceMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;
    std::vector<bool> valid;

    double at(int t, int g) const { return values[index(t, g)]; }
    bool is_valid(int t, int g) const { return valid[index(t, g)]; }
    std::size_t index(int t, int g) const {
        return static_cast<std::size_t>((t - 1) * cols + (g - 1));
    }
};

/// Teacher-forced divergence matrix for one reference pair. `suffixes` is
/// consulted once per cell in row-major order. With an oracle suffix the last
/// column has no continuation and is defined as 0.
DivergenceMatrix divergence_matrix(const models::TranslationModel &model, const SentencePair &pair,
                                   SuffixSource &suffixes);

/// Monotone read/write path through the matrix: g(t) is the first column at or
/// after g(t-1) whose value is <= lambda, or N. Starts from `initial_prefix`.
std::vector<int> threshold_path(const DivergenceMatrix &matrix, double lambda, int initial_prefix = 1);

} // namespace simt::policy
