#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "simt/error.hpp"
#include "simt/harness/synthetic.hpp"
#include "simt/models/micro_model.hpp"
#include "simt/training/training.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace simt;
using namespace simt::models;
using namespace simt::training;

namespace {

std::vector<SentencePair> random_pairs(int count, std::size_t vocab, std::uint64_t seed, int max_content = 6) {
    std::mt19937_64 rng(seed);
    std::vector<SentencePair> pairs;
    for (int i = 0; i < count; ++i) {
        const int n = std::uniform_int_distribution<int>(1, max_content)(rng);
        const int t = std::uniform_int_distribution<int>(1, max_content)(rng);
        pairs.push_back({fixtures::random_sentence(vocab, n, rng), fixtures::random_sentence(vocab, t, rng), {}});
    }
    return pairs;
}

harness::SyntheticCorpus copy_corpus(std::uint64_t seed) {
    harness::SyntheticSpec spec;
    spec.kind = harness::SyntheticKind::Copy;
    spec.vocab_size = 8;
    spec.min_len = 3;
    spec.max_len = 6;
    spec.n_pairs = 200;
    spec.seed = seed;
    return harness::generate_corpus(spec);
}

MicroConfig copy_config(const Vocabulary &vocab, EncoderMode mode) {
    MicroConfig cfg;
    cfg.vocab_size = vocab.size();
    cfg.d = 32;
    cfg.max_len = 8;
    cfg.mode = mode;
    cfg.bos = vocab.bos();
    return cfg;
}

} // namespace

TEST_CASE("bernoulli draws") {
    std::mt19937_64 rng(1);
    const int n = 10000;
    int ones = 0;
    for (int i = 0; i < n; ++i) {
        const int a = sample_alpha(0.8, rng);
        REQUIRE((a == 0 || a == 1));
        ones += a;
    }
    const double sigma = std::sqrt(n * 0.8 * 0.2);
    CHECK(std::abs(ones - n * 0.8) <= 3 * sigma);
    for (int i = 0; i < 100; ++i) {
        REQUIRE(sample_alpha(0.0, rng) == 0);
        REQUIRE(sample_alpha(1.0, rng) == 1);
    }
    CHECK_THROWS_AS(sample_alpha(1.5, rng), ConfigError);
}

TEST_CASE("prefix length draws are uniform") {
    std::mt19937_64 rng(2);
    const int n = 10000;
    const int len = 10;
    std::vector<int> bins(len + 1, 0);
    for (int i = 0; i < n; ++i) {
        const int l = sample_prefix_len(len, rng);
        REQUIRE(l >= 1);
        REQUIRE(l <= len);
        ++bins[static_cast<std::size_t>(l)];
    }
    const double p = 1.0 / len;
    const double sigma = std::sqrt(n * p * (1 - p));
    for (int l = 1; l <= len; ++l) {
        INFO("l = " << l);
        CHECK(std::abs(bins[static_cast<std::size_t>(l)] - n * p) <= 3 * sigma);
    }
    CHECK(sample_prefix_len(1, rng) == 1);
    CHECK_THROWS_AS(sample_prefix_len(0, rng), ValidationError);
}

TEST_CASE("p2f loss at l = N is the offline loss") {
    const auto pairs = random_pairs(20, 11, 3);
    MicroModel m(fixtures::micro_config(11, EncoderMode::Bidirectional), 5);
    for (const auto &pair : pairs) {
        const auto full = p2f_loss(m, pair, static_cast<int>(pair.source.size()));
        const auto off = offline_loss(m, std::span<const SentencePair>(&pair, 1));
        REQUIRE(full.loss == doctest::Approx(off.loss).epsilon(1e-12));
    }
    CHECK_THROWS_AS(p2f_loss(m, pairs[0], 0), ValidationError);
    CHECK_THROWS_AS(p2f_loss(m, pairs[0], static_cast<int>(pairs[0].source.size()) + 1), ValidationError);
}

TEST_CASE("a uniform model scores ln|V| under every loss") {
    const auto cfg = fixtures::micro_config(11, EncoderMode::Unidirectional);
    MicroParams params = MicroModel(cfg, 1).params();
    params[Tensor::Out].setZero();
    MicroModel m(cfg, params);
    const auto pairs = random_pairs(5, 11, 4);
    const double ln_v = std::log(11.0);
    CHECK(offline_loss(m, pairs).loss == doctest::Approx(ln_v).epsilon(1e-14));
    CHECK(p2f_loss(m, pairs[0], 1).loss == doctest::Approx(ln_v).epsilon(1e-14));
    CHECK(multipath_batch_loss(m, pairs, 2).loss == doctest::Approx(ln_v).epsilon(1e-14));
}

TEST_CASE("gradient checks for the training losses") {
    const std::vector<SentencePair> batch = {
        {{3, 4, 5, 6, 1}, {7, 8, 9, 1}, {}},
        {{10, 3, 1}, {4, 4, 5, 6, 7, 1}, {}},
    };
    auto report = [](const std::vector<double> &worst) {
        for (std::size_t k = 0; k < kTensorCount; ++k) {
            INFO("tensor " << tensor_name(static_cast<Tensor>(k)));
            CHECK(worst[k] < 1e-3);
        }
    };
    SUBCASE("offline") {
        MicroModel m(fixtures::micro_config(11, EncoderMode::Bidirectional), 31);
        const auto a = offline_loss(m, batch);
        report(oracle::gradient_check(m, [&] { return offline_loss(m, batch).loss; }, a.grads));
    }
    SUBCASE("multipath k = 2") {
        MicroModel m(fixtures::micro_config(11, EncoderMode::Unidirectional), 32);
        const auto a = multipath_batch_loss(m, batch, 2);
        report(oracle::gradient_check(m, [&] { return multipath_batch_loss(m, batch, 2).loss; }, a.grads));
    }
    SUBCASE("p2f l = 1") {
        MicroModel m(fixtures::micro_config(11, EncoderMode::Bidirectional), 33);
        const auto a = p2f_loss(m, batch[0], 1);
        report(oracle::gradient_check(m, [&] { return p2f_loss(m, batch[0], 1).loss; }, a.grads));
    }
}

TEST_CASE("total_loss_step") {
    const auto pairs = random_pairs(10, 11, 5);
    MicroModel m(fixtures::micro_config(11, EncoderMode::Bidirectional), 6);
    std::mt19937_64 rng(9);
    for (const auto &pair : pairs) {
        const auto zero = total_loss_step(m, pair, 0.0, rng);
        CHECK(zero.draw.alpha == 0);
        CHECK_FALSE(zero.draw.l.has_value());
        CHECK(zero.loss.loss == offline_loss(m, std::span<const SentencePair>(&pair, 1)).loss);

        const auto one = total_loss_step(m, pair, 1.0, rng);
        REQUIRE(one.draw.alpha == 1);
        REQUIRE(one.draw.l.has_value());
        CHECK(one.loss.loss == p2f_loss(m, pair, *one.draw.l).loss);
    }

    // a one-token source forces l = N
    const SentencePair single{{1}, {3, 4, 1}, {}};
    const auto forced = total_loss_step(m, single, 1.0, rng);
    CHECK(forced.draw.l == 1);
    CHECK(forced.loss.loss == doctest::Approx(offline_loss(m, std::span<const SentencePair>(&single, 1)).loss)
                                  .epsilon(1e-12));

    std::mt19937_64 a(4);
    std::mt19937_64 b(4);
    for (const auto &pair : pairs) {
        const auto x = total_loss_step(m, pair, 0.5, a);
        const auto y = total_loss_step(m, pair, 0.5, b);
        REQUIRE(x.draw.alpha == y.draw.alpha);
        REQUIRE(x.draw.l == y.draw.l);
        REQUIRE(x.loss.loss == y.loss.loss);
    }
}

TEST_CASE("multi-path wait-k") {
    const auto pairs = random_pairs(8, 11, 6);
    MicroModel uni(fixtures::micro_config(11, EncoderMode::Unidirectional), 7);
    const auto wk = waitk_example(pairs[0], 2);
    const int n = static_cast<int>(pairs[0].source.size());
    REQUIRE(wk.cross_limits.size() == pairs[0].target.size());
    for (std::size_t t = 0; t < wk.cross_limits.size(); ++t) {
        CHECK(wk.cross_limits[t] == std::min(static_cast<int>(t) + 2, n));
    }
    CHECK(multipath_batch_loss(uni, pairs, 100).loss == doctest::Approx(offline_loss(uni, pairs).loss).epsilon(1e-12));

    MicroModel bi(fixtures::micro_config(11, EncoderMode::Bidirectional), 7);
    CHECK_THROWS_AS(multipath_batch_loss(bi, pairs, 2), RegimeError);
    TrainConfig cfg;
    cfg.regime.kind = RegimeKind::Multipath;
    CHECK_THROWS_AS(train(bi, pairs, cfg), RegimeError);
}

TEST_CASE("multi-path k histogram covers every choice") {
    const auto pairs = random_pairs(40, 11, 7);
    MicroModel m(fixtures::micro_config(11, EncoderMode::Unidirectional), 8);
    TrainConfig cfg;
    cfg.regime.kind = RegimeKind::Multipath;
    cfg.batch_size = 1;
    cfg.epochs = 5;
    const auto result = train(m, pairs, cfg);
    std::map<int, std::size_t> total;
    for (const auto &e : result.epochs) {
        for (const auto &[k, c] : e.k_histogram) {
            total[k] += c;
        }
    }
    std::size_t sum = 0;
    for (int k : cfg.regime.k_choices) {
        CHECK(total[k] > 0);
        sum += total[k];
    }
    CHECK(sum == 200);
    CHECK(total.size() == cfg.regime.k_choices.size());
}

TEST_CASE("r = 0 training matches offline training step for step") {
    const auto pairs = random_pairs(30, 11, 8);
    const auto mcfg = fixtures::micro_config(11, EncoderMode::Bidirectional);
    MicroModel a(mcfg, 9);
    MicroModel b(mcfg, 9);
    TrainConfig off;
    off.epochs = 3;
    off.seed = 12;
    TrainConfig p2f = off;
    p2f.regime.kind = RegimeKind::P2F;
    p2f.regime.ratio_r = 0.0;
    const auto ra = train(a, pairs, off);
    const auto rb = train(b, pairs, p2f);
    REQUIRE(ra.step_losses.size() == rb.step_losses.size());
    for (std::size_t i = 0; i < ra.step_losses.size(); ++i) {
        REQUIRE(ra.step_losses[i] == rb.step_losses[i]);
    }
    CHECK(a.params().tensors == b.params().tensors);
    for (const auto &d : rb.draws) {
        REQUIRE(d.alpha == 0);
    }
}

TEST_CASE("p2f epoch statistics") {
    const auto pairs = random_pairs(50, 11, 9);
    MicroModel m(fixtures::micro_config(11, EncoderMode::Bidirectional), 10);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.regime.kind = RegimeKind::P2F;
    cfg.regime.ratio_r = 0.5;
    int callbacks = 0;
    const auto r = train(m, pairs, cfg, [&](const EpochStats &) { ++callbacks; });
    CHECK(callbacks == 2);
    REQUIRE(r.draws.size() == 100);
    std::size_t alphas = 0;
    for (const auto &e : r.epochs) {
        CHECK(e.examples == 50);
        alphas += e.alpha_count;
        if (e.alpha_count > 0) {
            CHECK(*e.mean_l() >= 1.0);
        }
    }
    std::size_t drawn = 0;
    for (const auto &d : r.draws) {
        drawn += static_cast<std::size_t>(d.alpha);
        CHECK(d.l.has_value() == (d.alpha == 1));
    }
    CHECK(alphas == drawn);
    CHECK(epoch_csv_header() == "epoch,mean_loss,alpha_rate,mean_l,k_histogram");
}

TEST_CASE("training edge cases") {
    const auto pairs = random_pairs(10, 11, 10);
    const auto mcfg = fixtures::micro_config(11, EncoderMode::Bidirectional);
    MicroModel m(mcfg, 11);
    const auto before = m.params();

    TrainConfig cfg;
    cfg.epochs = 0;
    const auto none = train(m, pairs, cfg);
    CHECK(none.epochs.empty());
    CHECK(m.params().tensors == before.tensors);

    // one batch per epoch, so a rerun with fewer epochs stops right before the failing step
    const std::vector<SentencePair> four(pairs.begin(), pairs.begin() + 4);
    cfg.epochs = 20;
    cfg.lr = 1e300;
    const auto blown = train(m, four, cfg);
    REQUIRE(blown.diverged.has_value());
    const auto good_steps = static_cast<int>(blown.step_losses.size());
    MicroModel replay(mcfg, 11);
    cfg.epochs = good_steps;
    const auto clean = train(replay, four, cfg);
    CHECK_FALSE(clean.diverged.has_value());
    CHECK(m.params().tensors == replay.params().tensors);

    CHECK_THROWS_AS(train(m, std::vector<SentencePair>{}, TrainConfig{}), ValidationError);
    cfg = {};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(train(m, pairs, cfg), ConfigError);
    cfg = {};
    cfg.regime.kind = RegimeKind::P2F;
    cfg.regime.ratio_r = 1.2;
    CHECK_THROWS_AS(train(m, pairs, cfg), ConfigError);
    CHECK(parse_regime("p2f") == RegimeKind::P2F);
    CHECK_THROWS_AS(parse_regime("online"), ConfigError);
}

TEST_CASE("offline training learns the copy language") {
    const auto corpus = copy_corpus(1);
    MicroModel m(copy_config(corpus.vocab, EncoderMode::Bidirectional), 1);
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch_size = 4;
    cfg.lr = 0.2;
    cfg.seed = 1;
    const auto r = train(m, corpus.pairs, cfg);
    REQUIRE_FALSE(r.diverged.has_value());
    REQUIRE(r.epochs.size() == 30);
    const double floor = 0.1 * std::log(static_cast<double>(corpus.vocab.size()));
    CHECK(r.epochs.back().mean_loss < floor);
    CHECK(r.epochs.back().mean_loss < r.epochs.front().mean_loss);
}
