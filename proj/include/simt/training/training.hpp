#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "simt/models/micro_model.hpp"
#include "simt/types.hpp"

namespace simt::training {

/// Uniform draw from {1..n}.
int sample_prefix_len(int n, std::mt19937_64 &rng);

/// Bernoulli(r) draw: 1 with probability r.
int sample_alpha(double r, std::mt19937_64 &rng);

/// Full-sentence cross-entropy of `pair.target` given the whole source.
models::LossAndGrads offline_loss(const models::MicroModel &model, std::span<const SentencePair> batch);

/// Cross-entropy of the full target given only the first `l` source tokens as
/// the encoder input.
models::LossAndGrads p2f_loss(const models::MicroModel &model, const SentencePair &pair, int l);

struct StepDraw {
    int alpha = 0;
    /// Source prefix length used; only set when alpha = 1.
    std::optional<int> l;
};

struct StepResult {
    models::LossAndGrads loss;
    StepDraw draw;
};

/// Draws alpha ~ Bernoulli(r) and, when alpha = 1, l ~ Uniform{1..N}; returns
/// the offline loss for alpha = 0 and p2f_loss otherwise.
StepResult total_loss_step(const models::MicroModel &model, const SentencePair &pair, double ratio_r,
                           std::mt19937_64 &rng);

/// Training example whose decoder position t (0-based) sees only the first
/// min(t + k, N) encoder states.
models::TrainingExample waitk_example(const SentencePair &pair, int k);

/// Mean token NLL with wait-k cross-attention limits. Throws RegimeError for a
/// bidirectional encoder, whose states already mix in unread tokens.
models::LossAndGrads multipath_batch_loss(const models::MicroModel &model, std::span<const SentencePair> batch,
                                          int k);

enum class RegimeKind { Offline, Multipath, P2F };

std::string to_string(RegimeKind kind);
RegimeKind parse_regime(const std::string &text);

struct TrainRegime {
    RegimeKind kind = RegimeKind::Offline;
    /// MULTIPATH: k drawn uniformly per batch from this set.
    std::vector<int> k_choices = {1, 3, 5, 7, 9};
    /// P2F: Bernoulli parameter r.
    double ratio_r = 0.0;

    void validate() const;
};

struct TrainConfig {
    TrainRegime regime;
    int epochs = 30;
    int batch_size = 4;
    double lr = 0.05;
    std::uint64_t seed = 0;

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    /// Token-weighted mean of the batch losses seen during the epoch.
    double mean_loss = 0.0;
    std::size_t examples = 0;
    std::size_t alpha_count = 0;
    double l_sum = 0.0;
    std::map<int, std::size_t> k_histogram;

    double alpha_rate() const;
    /// Mean drawn l over alpha = 1 examples; nullopt if there were none.
    std::optional<double> mean_l() const;
};

struct TrainResult {
    std::vector<EpochStats> epochs;
    /// Loss of every optimizer step, in order.
    std::vector<double> step_losses;
    /// Every (alpha, l) draw, in order (P2F only).
    std::vector<StepDraw> draws;
    /// Set when training stopped on a non-finite loss or update. The model then
    /// holds the parameters from before the failing step.
    std::optional<std::string> diverged;
};

using EpochCallback = std::function<void(const EpochStats &)>;

/// Runs `cfg.epochs` epochs of shuffled minibatch SGD. Shuffling and the
/// regime's draws use separate generators seeded from `cfg.seed`, so the batch
/// order is identical across regimes.
TrainResult train(models::MicroModel &model, std::span<const SentencePair> corpus, const TrainConfig &cfg,
                  const EpochCallback &on_epoch = {});

/// CSV header and row for the loss curve. The k histogram is written as
/// "k:count" pairs separated by '|'.
std::string epoch_csv_header();
std::string epoch_csv_row(const EpochStats &stats);

} // namespace simt::training
