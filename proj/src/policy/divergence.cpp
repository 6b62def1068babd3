#include "simt/policy/divergence.hpp"

#include <algorithm>
#include <cmath>

#include "simt/error.hpp"

namespace simt::policy {

double cosine_divergence(const Distribution &p, const Distribution &q) {
    if (p.size() != q.size()) {
        throw ValidationError("cosine_divergence: distributions have different sizes");
    }
    double dot = 0.0;
    double pp = 0.0;
    double qq = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        dot += p[i] * q[i];
        pp += p[i] * p[i];
        qq += q[i] * q[i];
    }
    return std::clamp(1.0 - dot / std::sqrt(pp * qq), 0.0, 1.0);
}

double psfuture_divergence(const models::TranslationModel &model, std::span<const TokenId> source_prefix,
                           std::span<const TokenId> target_prefix, std::span<const TokenId> suffix) {
    TokenSeq pseudo(source_prefix.begin(), source_prefix.end());
    pseudo.insert(pseudo.end(), suffix.begin(), suffix.end());
    return cosine_divergence(model.next_dist(source_prefix, target_prefix),
                             model.next_dist(pseudo, target_prefix));
}

DivergenceMatrix divergence_matrix(const models::TranslationModel &model, const SentencePair &pair,
                                   SuffixSource &suffixes) {
    DivergenceMatrix m;
    m.rows = static_cast<int>(pair.target.size());
    m.cols = static_cast<int>(pair.source.size());
    m.values.assign(static_cast<std::size_t>(m.rows * m.cols), 0.0);
    m.valid.assign(m.values.size(), true);
    const std::span<const TokenId> source(pair.source);
    const std::span<const TokenId> target(pair.target);
    const bool oracle = suffixes.spec().is_oracle();
    for (int t = 1; t <= m.rows; ++t) {
        const auto prefix = target.first(static_cast<std::size_t>(t - 1));
        for (int g = 1; g <= m.cols; ++g) {
            if (oracle && g == m.cols) {
                continue;
            }
            const TokenSeq suffix = suffixes.next(source, g);
            m.values[m.index(t, g)] =
                psfuture_divergence(model, source.first(static_cast<std::size_t>(g)), prefix, suffix);
        }
    }
    return m;
}

std::vector<int> threshold_path(const DivergenceMatrix &matrix, double lambda, int initial_prefix) {
    std::vector<int> path;
    int g = std::clamp(initial_prefix, 1, std::max(matrix.cols, 1));
    for (int t = 1; t <= matrix.rows; ++t) {
        while (g < matrix.cols && !(matrix.is_valid(t, g) && matrix.at(t, g) <= lambda)) {
            ++g;
        }
        path.push_back(g);
    }
    return path;
}

} // namespace simt::policy
