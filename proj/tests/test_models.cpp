#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "simt/error.hpp"
#include "simt/models/micro_model.hpp"
#include "simt/models/model_io.hpp"
#include "simt/models/table_model.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace simt;
using namespace simt::models;

namespace {

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "simt_test_models";
    std::filesystem::create_directories(dir);
    return dir;
}

// Linear scan over the entries in schedule order, independent of the map lookup.
const Distribution *scan_lookup(const TableModel &m, const TokenSeq &src, const TokenSeq &tgt) {
    auto tail = [](const TokenSeq &s, int keep) {
        if (keep < 0 || static_cast<std::size_t>(keep) >= s.size()) {
            return s;
        }
        return TokenSeq(s.end() - keep, s.end());
    };
    std::vector<std::pair<TokenSeq, TokenSeq>> keys = {{src, tgt}};
    for (const auto &level : m.backoff()) {
        keys.emplace_back(tail(src, level.source_keep), tail(tgt, level.target_keep));
    }
    for (const auto &key : keys) {
        for (const auto &[k, dist] : m.entries()) {
            if (k == key) {
                return &dist;
            }
        }
    }
    return &m.default_dist();
}

TokenSeq random_ids(std::mt19937_64 &rng, int max_len, int vocab) {
    const int len = std::uniform_int_distribution<int>(0, max_len)(rng);
    TokenSeq s(static_cast<std::size_t>(len));
    for (auto &t : s) {
        t = std::uniform_int_distribution<int>(0, vocab - 1)(rng);
    }
    return s;
}

} // namespace

TEST_CASE("backoff schedule parsing") {
    const auto levels = parse_backoff("t2,t1,t0,s*");
    REQUIRE(levels.size() == 6);
    CHECK(levels[0] == BackoffLevel{-1, 2});
    CHECK(levels[2] == BackoffLevel{-1, 0});
    CHECK(levels[3] == BackoffLevel{2, 0});
    CHECK(levels[5] == BackoffLevel{0, 0});
    CHECK(format_backoff(levels) == "t2,t1,t0,s*");
    CHECK(parse_backoff("").empty());
    CHECK_THROWS_AS(parse_backoff("x2"), FormatError);
    CHECK_THROWS_AS(parse_backoff("t2,,s1"), FormatError);
}

TEST_CASE("table model lookup") {
    const std::size_t v = 6;
    TableModel m(Distribution::uniform(v));
    // copy-language entry: source [a] -> next target token a
    m.set_entry({3}, {}, Distribution::delta(v, 3));
    CHECK(m.next_dist(TokenSeq{3}, TokenSeq{}) == Distribution::delta(v, 3));
    CHECK(m.lookup(TokenSeq{3}, TokenSeq{}).level == 0);

    CHECK(m.next_dist(TokenSeq{5, 5, 5}, TokenSeq{4}) == Distribution::uniform(v));
    CHECK(m.lookup(TokenSeq{5, 5, 5}, TokenSeq{4}).level == -1);

    // only reachable once the target context is cut to its last two tokens
    m.set_entry({4, 5}, {3, 4}, Distribution::delta(v, 5));
    const auto hit = m.lookup(TokenSeq{4, 5}, TokenSeq{5, 3, 4});
    CHECK(hit.level == 1);
    CHECK(*hit.dist == Distribution::delta(v, 5));
    CHECK(hit.dist == scan_lookup(m, {4, 5}, {5, 3, 4}));
    CHECK_THROWS_AS(m.set_entry({1}, {}, Distribution::uniform(v + 1)), ValidationError);
}

TEST_CASE("table model lookup agrees with a linear scan and is total") {
    std::mt19937_64 rng(5);
    const int v = 6;
    TableModel m(Distribution::uniform(v));
    for (int i = 0; i < 60; ++i) {
        auto p = fixtures::random_simplex(v, rng);
        m.set_entry(random_ids(rng, 3, v), random_ids(rng, 2, v), Distribution(p));
    }
    for (int q = 0; q < 10000; ++q) {
        const TokenSeq src = random_ids(rng, 4, v);
        const TokenSeq tgt = random_ids(rng, 3, v);
        const auto a = m.lookup(src, tgt);
        REQUIRE(a.dist == scan_lookup(m, src, tgt));
        REQUIRE(m.next_dist(src, tgt) == m.next_dist(src, tgt));
        REQUIRE(a.dist->size() == static_cast<std::size_t>(v));
    }
}

TEST_CASE("micro model forward gives a distribution; zero output layer gives uniform") {
    const auto cfg = fixtures::micro_config(11, EncoderMode::Bidirectional);
    MicroModel m(cfg, 3);
    const auto d = m.forward(TokenSeq{4, 5, 1}, TokenSeq{6});
    double sum = 0;
    for (double p : d.probs()) {
        CHECK(p >= 0);
        sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

    MicroParams params = m.params();
    params[Tensor::Out].setZero();
    MicroModel flat(cfg, params);
    const auto u = flat.forward(TokenSeq{4, 5, 1}, TokenSeq{6});
    for (double p : u.probs()) {
        CHECK(p == doctest::Approx(1.0 / 11).epsilon(1e-15));
    }
    const std::vector<TrainingExample> batch = {{{4, 5, 1}, {7, 8, 9, 1}, {}}};
    CHECK(flat.loss(batch) == doctest::Approx(std::log(11.0)).epsilon(1e-14));
}

TEST_CASE("micro model errors") {
    const auto cfg = fixtures::micro_config(11, EncoderMode::Bidirectional, 8, 4);
    MicroModel m(cfg, 1);
    CHECK_THROWS_AS(m.forward(TokenSeq{3, 4, 5, 6, 1}, TokenSeq{}), CapacityError);
    CHECK_THROWS_AS(m.forward(TokenSeq{}, TokenSeq{}), ValidationError);
    CHECK_THROWS_AS(m.forward(TokenSeq{3, 1}, TokenSeq{}, 3), ValidationError);
    CHECK_THROWS_AS(m.forward(TokenSeq{30, 1}, TokenSeq{}), ValidationError);
    MicroParams bad = m.params();
    bad[Tensor::EncQ](0, 0) = std::nan("");
    CHECK_THROWS_AS(MicroModel(cfg, bad), NumericError);
}

TEST_CASE("unidirectional mask invariance, bidirectional leak") {
    std::mt19937_64 rng(21);
    int bi_changes = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = std::uniform_int_distribution<int>(3, 8)(rng);
        const TokenSeq src = fixtures::random_sentence(11, n - 1, rng);
        const int g = std::uniform_int_distribution<int>(1, n - 1)(rng);
        TokenSeq perturbed = src;
        for (int p = g; p < n; ++p) {
            perturbed[static_cast<std::size_t>(p)] = std::uniform_int_distribution<int>(3, 10)(rng);
        }
        const TokenSeq tgt = fixtures::random_sentence(11, 2, rng);
        const std::span<const TokenId> prefix(tgt.data(), 2);
        MicroModel uni(fixtures::micro_config(11, EncoderMode::Unidirectional), 100 + trial);
        MicroModel bi(fixtures::micro_config(11, EncoderMode::Bidirectional), 100 + trial);
        REQUIRE(uni.forward(src, prefix, g) == uni.forward(perturbed, prefix, g));
        if (!(bi.forward(src, prefix, g) == bi.forward(perturbed, prefix, g))) {
            ++bi_changes;
        }
    }
    CHECK(bi_changes >= 1);
}

TEST_CASE("gradients match central finite differences") {
    for (auto mode : {EncoderMode::Bidirectional, EncoderMode::Unidirectional}) {
        MicroModel m(fixtures::micro_config(11, mode, 8, 8), 9);
        const std::vector<TrainingExample> batch = {
            {{3, 4, 5, 1}, {6, 7, 1}, {}},
            {{8, 9, 10, 3, 1}, {4, 5, 6, 7, 1}, {2, 3, 4, 5, 5}},
        };
        const auto analytic = m.loss_and_grads(batch);
        CHECK(analytic.tokens == 8);
        const auto worst = oracle::gradient_check(m, [&] { return m.loss(batch); }, analytic.grads);
        for (std::size_t k = 0; k < kTensorCount; ++k) {
            INFO("tensor " << tensor_name(static_cast<Tensor>(k)));
            CHECK(worst[k] < 1e-3);
        }
    }
}

TEST_CASE("loss is invariant to batch order") {
    MicroModel m(fixtures::micro_config(11, EncoderMode::Bidirectional), 4);
    std::vector<TrainingExample> batch = {{{3, 4, 1}, {4, 3, 1}, {}}, {{5, 6, 7, 1}, {7, 1}, {}}, {{8, 1}, {8, 9, 1}, {}}};
    const double a = m.loss(batch);
    std::reverse(batch.begin(), batch.end());
    CHECK(m.loss(batch) == doctest::Approx(a).epsilon(1e-14));
}

TEST_CASE("sgd step") {
    const auto cfg = fixtures::micro_config(11, EncoderMode::Bidirectional);
    MicroModel m(cfg, 2);
    const MicroParams before = m.params();
    auto grads = MicroParams::zeros(cfg);
    m.sgd_step(grads, 0.5);
    CHECK(m.params().tensors == before.tensors);

    grads[Tensor::Out].setConstant(1.0);
    m.sgd_step(grads, 0.0);
    CHECK(m.params().tensors == before.tensors);

    auto p = before;
    p[Tensor::Out](0, 0) = 1.0;
    MicroModel single(cfg, p);
    auto g = MicroParams::zeros(cfg);
    g[Tensor::Out](0, 0) = 2.0;
    single.sgd_step(g, 0.1);
    CHECK(single.params()[Tensor::Out](0, 0) == doctest::Approx(0.8).epsilon(1e-15));

    g[Tensor::FfnIn](1, 1) = std::numeric_limits<double>::infinity();
    const MicroParams kept = single.params();
    CHECK_THROWS_AS(single.sgd_step(g, 0.1), NumericError);
    CHECK(single.params().tensors == kept.tensors);
    CHECK_THROWS_AS(single.sgd_step(MicroParams::zeros(cfg), -1.0), ConfigError);
}

TEST_CASE("micro model file round trip") {
    const auto dir = temp_dir();
    const auto vocab = fixtures::letters(8);
    MicroModel m(fixtures::micro_config(vocab.size(), EncoderMode::Unidirectional), 17);
    save_model(dir / "micro.json", m, vocab);
    const LoadedModel back = load_model(dir / "micro.json");
    REQUIRE_FALSE(back.is_table());
    const auto &m2 = std::get<MicroModel>(back.model);
    CHECK(m2.params().tensors == m.params().tensors);
    CHECK(m2.config().mode == EncoderMode::Unidirectional);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        const TokenSeq src = fixtures::random_sentence(vocab.size(), 4, rng);
        const TokenSeq tgt = fixtures::random_sentence(vocab.size(), 2, rng);
        REQUIRE(m.next_dist(src, tgt) == back.kernel().next_dist(src, tgt));
    }
}

TEST_CASE("table model file round trip") {
    const auto dir = temp_dir();
    const auto vocab = fixtures::letters(3);
    TableModel m(Distribution::uniform(vocab.size()), parse_backoff("t1,s1"));
    m.set_entry({3}, {}, Distribution::delta(vocab.size(), 3));
    m.set_entry({3, 4}, {3}, Distribution::delta(vocab.size(), 4));
    m.set_entry({4}, {5}, Distribution(std::vector<double>{0, 0.5, 0, 0.25, 0.25, 0}));
    save_model(dir / "table.json", m, vocab);
    const LoadedModel back = load_model(dir / "table.json");
    REQUIRE(back.is_table());
    const auto &t = std::get<TableModel>(back.model);
    CHECK(t.entries() == m.entries());
    CHECK(t.backoff() == m.backoff());
    std::mt19937_64 rng(8);
    for (int i = 0; i < 2000; ++i) {
        const TokenSeq src = random_ids(rng, 3, 6);
        const TokenSeq tgt = random_ids(rng, 2, 6);
        const auto a = m.lookup(src, tgt);
        const auto b = t.lookup(src, tgt);
        REQUIRE(a.level == b.level);
        REQUIRE(*a.dist == *b.dist);
    }
}

TEST_CASE("corrupt and mismatched model files") {
    const auto dir = temp_dir();
    const auto vocab = fixtures::letters(3);
    MicroModel m(fixtures::micro_config(vocab.size(), EncoderMode::Bidirectional), 1);
    save_model(dir / "ok.json", m, vocab);

    std::ifstream in(dir / "ok.json");
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream(dir / "cut.json") << text.substr(0, text.size() / 2);
    CHECK_THROWS_AS(load_model(dir / "cut.json"), FormatError);

    auto j = nlohmann::json::parse(text);
    j["version"] = 99;
    std::ofstream(dir / "version.json") << j.dump();
    CHECK_THROWS_AS(load_model(dir / "version.json"), FormatError);

    j = nlohmann::json::parse(text);
    j["meta"]["vocab_hash"] = "0000000000000000";
    std::ofstream(dir / "hash.json") << j.dump();
    CHECK_THROWS_AS(load_model(dir / "hash.json"), FormatError);

    CHECK_THROWS_AS(load_model(dir / "absent.json"), IoError);
    CHECK_THROWS_AS(save_model(dir / "bad.json", m, fixtures::letters(4)), ValidationError);
}
