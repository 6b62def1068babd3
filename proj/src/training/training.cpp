#include "simt/training/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "simt/error.hpp"
#include "simt/policy/suffix.hpp"
#include "simt/policy/waitk.hpp"

namespace simt::training {

using models::LossAndGrads;
using models::MicroModel;
using models::TrainingExample;

int sample_prefix_len(int n, std::mt19937_64 &rng) {
    if (n < 1) {
        throw ValidationError("sample_prefix_len: N must be >= 1");
    }
    return std::uniform_int_distribution<int>(1, n)(rng);
}

int sample_alpha(double r, std::mt19937_64 &rng) {
    if (!(r >= 0.0 && r <= 1.0)) {
        throw ConfigError("sample_alpha: r must lie in [0, 1]");
    }
    return std::bernoulli_distribution(r)(rng) ? 1 : 0;
}

LossAndGrads offline_loss(const MicroModel &model, std::span<const SentencePair> batch) {
    std::vector<TrainingExample> examples;
    examples.reserve(batch.size());
    for (const auto &pair : batch) {
        examples.push_back({pair.source, pair.target, {}});
    }
    return model.loss_and_grads(examples);
}

namespace {

TrainingExample prefix_example(const SentencePair &pair, int l) {
    const int n = static_cast<int>(pair.source.size());
    if (l < 1 || l > n) {
        throw ValidationError("p2f_loss: l = " + std::to_string(l) + " outside [1, " + std::to_string(n) + "]");
    }
    return {TokenSeq(pair.source.begin(), pair.source.begin() + l), pair.target, {}};
}

void require_unidirectional(const MicroModel &model) {
    if (model.config().mode != models::EncoderMode::Unidirectional) {
        throw RegimeError("multi-path wait-k training needs a unidirectional encoder");
    }
}

} // namespace

LossAndGrads p2f_loss(const MicroModel &model, const SentencePair &pair, int l) {
    const TrainingExample example = prefix_example(pair, l);
    return model.loss_and_grads(std::span<const TrainingExample>(&example, 1));
}

StepResult total_loss_step(const MicroModel &model, const SentencePair &pair, double ratio_r,
                           std::mt19937_64 &rng) {
    StepResult result;
    result.draw.alpha = sample_alpha(ratio_r, rng);
    if (result.draw.alpha == 1) {
        result.draw.l = sample_prefix_len(static_cast<int>(pair.source.size()), rng);
        result.loss = p2f_loss(model, pair, *result.draw.l);
    } else {
        result.loss = offline_loss(model, std::span<const SentencePair>(&pair, 1));
    }
    return result;
}

TrainingExample waitk_example(const SentencePair &pair, int k) {
    const int n = static_cast<int>(pair.source.size());
    TrainingExample example{pair.source, pair.target, {}};
    example.cross_limits.reserve(pair.target.size());
    for (std::size_t t = 0; t < pair.target.size(); ++t) {
        example.cross_limits.push_back(policy::waitk_g(static_cast<int>(t) + 1, k, n));
    }
    return example;
}

LossAndGrads multipath_batch_loss(const MicroModel &model, std::span<const SentencePair> batch, int k) {
    require_unidirectional(model);
    std::vector<TrainingExample> examples;
    examples.reserve(batch.size());
    for (const auto &pair : batch) {
        examples.push_back(waitk_example(pair, k));
    }
    return model.loss_and_grads(examples);
}

std::string to_string(RegimeKind kind) {
    switch (kind) {
    case RegimeKind::Offline:
        return "offline";
    case RegimeKind::Multipath:
        return "multipath";
    case RegimeKind::P2F:
        return "p2f";
    }
    return "?";
}

RegimeKind parse_regime(const std::string &text) {
    if (text == "offline") {
        return RegimeKind::Offline;
    }
    if (text == "multipath") {
        return RegimeKind::Multipath;
    }
    if (text == "p2f") {
        return RegimeKind::P2F;
    }
    throw ConfigError("unknown regime '" + text + "' (expected offline, multipath or p2f)");
}

void TrainRegime::validate() const {
    if (kind == RegimeKind::Multipath) {
        if (k_choices.empty()) {
            throw ConfigError("k_choices must not be empty");
        }
        for (int k : k_choices) {
            if (k < 1) {
                throw ConfigError("k_choices entries must be >= 1");
            }
        }
    }
    if (!(ratio_r >= 0.0 && ratio_r <= 1.0)) {
        throw ConfigError("ratio r must lie in [0, 1]");
    }
}

void TrainConfig::validate() const {
    regime.validate();
    if (epochs < 0) {
        throw ConfigError("epochs must be >= 0");
    }
    if (batch_size < 1) {
        throw ConfigError("batch_size must be >= 1");
    }
    if (!std::isfinite(lr) || lr < 0.0) {
        throw ConfigError("lr must be finite and >= 0");
    }
}

double EpochStats::alpha_rate() const {
    return examples == 0 ? 0.0 : static_cast<double>(alpha_count) / static_cast<double>(examples);
}

std::optional<double> EpochStats::mean_l() const {
    if (alpha_count == 0) {
        return std::nullopt;
    }
    return l_sum / static_cast<double>(alpha_count);
}

TrainResult train(MicroModel &model, std::span<const SentencePair> corpus, const TrainConfig &cfg,
                  const EpochCallback &on_epoch) {
    cfg.validate();
    if (corpus.empty()) {
        throw ValidationError("train: empty corpus");
    }
    if (cfg.regime.kind == RegimeKind::Multipath) {
        require_unidirectional(model);
    }

    std::mt19937_64 shuffle_rng(policy::session_seed(cfg.seed, 0));
    std::mt19937_64 draw_rng(policy::session_seed(cfg.seed, 1));
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        EpochStats stats;
        stats.epoch = epoch;
        double weighted = 0.0;
        std::size_t tokens = 0;

        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t end = std::min(order.size(), start + batch_size);
            std::vector<TrainingExample> batch;
            batch.reserve(end - start);

            int k = 0;
            if (cfg.regime.kind == RegimeKind::Multipath) {
                const auto &choices = cfg.regime.k_choices;
                k = choices[std::uniform_int_distribution<std::size_t>(0, choices.size() - 1)(draw_rng)];
                ++stats.k_histogram[k];
            }
            for (std::size_t i = start; i < end; ++i) {
                const SentencePair &pair = corpus[order[i]];
                switch (cfg.regime.kind) {
                case RegimeKind::Offline:
                    batch.push_back({pair.source, pair.target, {}});
                    break;
                case RegimeKind::Multipath:
                    batch.push_back(waitk_example(pair, k));
                    break;
                case RegimeKind::P2F: {
                    StepDraw draw;
                    draw.alpha = sample_alpha(cfg.regime.ratio_r, draw_rng);
                    if (draw.alpha == 1) {
                        draw.l = sample_prefix_len(static_cast<int>(pair.source.size()), draw_rng);
                        batch.push_back(prefix_example(pair, *draw.l));
                        ++stats.alpha_count;
                        stats.l_sum += *draw.l;
                    } else {
                        batch.push_back({pair.source, pair.target, {}});
                    }
                    result.draws.push_back(draw);
                    break;
                }
                }
            }
            stats.examples += batch.size();

            try {
                LossAndGrads lg = model.loss_and_grads(batch);
                if (!std::isfinite(lg.loss)) {
                    throw NumericError("non-finite loss");
                }
                model.sgd_step(lg.grads, cfg.lr);
                result.step_losses.push_back(lg.loss);
                weighted += lg.loss * static_cast<double>(lg.tokens);
                tokens += lg.tokens;
            } catch (const NumericError &e) {
                std::ostringstream msg;
                msg << "epoch " << epoch << ", step " << result.step_losses.size() + 1 << ": " << e.what();
                result.diverged = msg.str();
                return result;
            }
        }
        stats.mean_loss = tokens == 0 ? 0.0 : weighted / static_cast<double>(tokens);
        result.epochs.push_back(stats);
        if (on_epoch) {
            on_epoch(stats);
        }
    }
    return result;
}

std::string epoch_csv_header() { return "epoch,mean_loss,alpha_rate,mean_l,k_histogram"; }

std::string epoch_csv_row(const EpochStats &stats) {
    std::ostringstream out;
    out.precision(10);
    out << stats.epoch << ',' << stats.mean_loss << ',' << stats.alpha_rate() << ',';
    if (auto l = stats.mean_l()) {
        out << *l;
    }
    out << ',';
    bool first = true;
    for (const auto &[k, count] : stats.k_histogram) {
        out << (first ? "" : "|") << k << ':' << count;
        first = false;
    }
    return out.str();
}

} // namespace simt::training
