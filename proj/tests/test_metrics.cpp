#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "simt/error.hpp"
#include "simt/metrics/metrics.hpp"
#include "simt/policy/waitk.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace simt;
using namespace simt::metrics;

namespace {

using Words = std::vector<std::string>;

Words words(const std::string &text) {
    Words out;
    std::string cur;
    for (char c : text) {
        if (c == ' ') {
            if (!cur.empty()) {
                out.push_back(cur);
            }
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) {
        out.push_back(cur);
    }
    return out;
}

// Straightforward corpus BLEU-4 over lowercase words, written from the definition.
double reference_bleu(const std::vector<Words> &hyps, const std::vector<Words> &refs) {
    auto lower = [](std::string s) {
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
        return s;
    };
    double matches[4] = {0, 0, 0, 0};
    double totals[4] = {0, 0, 0, 0};
    double hyp_len = 0;
    double ref_len = 0;
    for (std::size_t s = 0; s < hyps.size(); ++s) {
        Words h;
        Words r;
        for (const auto &w : hyps[s]) {
            h.push_back(lower(w));
        }
        for (const auto &w : refs[s]) {
            r.push_back(lower(w));
        }
        hyp_len += static_cast<double>(h.size());
        ref_len += static_cast<double>(r.size());
        for (std::size_t n = 1; n <= 4; ++n) {
            std::map<Words, int> hc;
            std::map<Words, int> rc;
            for (std::size_t i = 0; i + n <= h.size(); ++i) {
                ++hc[Words(h.begin() + static_cast<long>(i), h.begin() + static_cast<long>(i + n))];
            }
            for (std::size_t i = 0; i + n <= r.size(); ++i) {
                ++rc[Words(r.begin() + static_cast<long>(i), r.begin() + static_cast<long>(i + n))];
            }
            for (const auto &[gram, c] : hc) {
                totals[n - 1] += c;
                const auto it = rc.find(gram);
                matches[n - 1] += it == rc.end() ? 0 : std::min(c, it->second);
            }
        }
    }
    double log_p = 0;
    for (int n = 0; n < 4; ++n) {
        if (matches[n] == 0) {
            return 0.0;
        }
        log_p += std::log(matches[n] / totals[n]);
    }
    const double bp = hyp_len >= ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len);
    return 100.0 * bp * std::exp(log_p / 4);
}

} // namespace

TEST_CASE("average lagging examples") {
    std::vector<int> g;
    for (int t = 1; t <= 10; ++t) {
        g.push_back(std::min(t + 2, 10));
    }
    CHECK(average_lagging(g, 10, 10) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(average_lagging(std::vector<int>(7, 6), 6, 7) == 6.0);
    std::vector<int> wait1 = {1, 2, 3, 4, 5};
    CHECK(average_lagging(wait1, 5, 5) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(average_lagging(std::vector<int>{}, 3, 3), ValidationError);
    CHECK_THROWS_AS(average_lagging(std::vector<int>{2, 1}, 3, 2), ValidationError);
    CHECK_THROWS_AS(average_lagging(std::vector<int>{0, 1}, 3, 2), ValidationError);
    CHECK_THROWS_AS(average_lagging(std::vector<int>{1, 4}, 3, 2), ValidationError);
}

TEST_CASE("wait-k average lagging is exactly k") {
    for (int k = 1; k <= 5; ++k) {
        for (int n = k + 1; n <= 12; ++n) {
            std::vector<int> g;
            for (int t = 1; t <= n; ++t) {
                g.push_back(policy::waitk_g(t, k, n));
            }
            INFO("k=" << k << " N=" << n);
            CHECK(std::abs(average_lagging(g, n, n) - oracle::waitk_al_closed_form(k)) <= 1e-9);
        }
    }
}

TEST_CASE("average lagging matches the definition on random records") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 2000; ++trial) {
        const int n = std::uniform_int_distribution<int>(1, 15)(rng);
        const int t_len = std::uniform_int_distribution<int>(1, 15)(rng);
        std::vector<int> g;
        int cur = 1;
        for (int t = 0; t < t_len; ++t) {
            cur = std::uniform_int_distribution<int>(cur, n)(rng);
            g.push_back(cur);
        }
        REQUIRE(average_lagging(g, n, t_len) == doctest::Approx(oracle::average_lagging(g, n, t_len)).epsilon(1e-12));
    }
}

TEST_CASE("bleu examples") {
    CHECK(corpus_bleu({words("a b c d")}, {words("a b c d e")}) == doctest::Approx(77.88).epsilon(0.01 / 77.88));
    CHECK(corpus_bleu({words("a b c d")}, {words("a b c d e")}) ==
          doctest::Approx(oracle::bleu_from_counts({{4, 4}, {3, 3}, {2, 2}, {1, 1}}, 4, 5)));
    CHECK(corpus_bleu({words("x y z w"), words("p q r s t")}, {words("x y z w"), words("p q r s t")}) ==
          doctest::Approx(100.0));
    CHECK(corpus_bleu({Words{}, Words{}}, {words("a b c d"), words("e f")}) == 0.0);
    CHECK(corpus_bleu({words("The Cat sat on")}, {words("the cat SAT on")}) == doctest::Approx(100.0));
    // no 4-gram match at corpus level
    CHECK(corpus_bleu({words("a b c x d")}, {words("a b c y d")}) == 0.0);
    CHECK_THROWS_AS(corpus_bleu({words("a")}, {}), ValidationError);
}

TEST_CASE("bleu agrees with a direct recomputation and ignores order") {
    std::mt19937_64 rng(3);
    const std::vector<std::string> lexicon = {"a", "b", "c", "d", "e", "F", "g"};
    std::uniform_int_distribution<std::size_t> pick(0, lexicon.size() - 1);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Words> hyps;
        std::vector<Words> refs;
        const int n = std::uniform_int_distribution<int>(1, 8)(rng);
        for (int s = 0; s < n; ++s) {
            Words r;
            const int len = std::uniform_int_distribution<int>(4, 10)(rng);
            for (int i = 0; i < len; ++i) {
                r.push_back(lexicon[pick(rng)]);
            }
            Words h = r;
            for (auto &w : h) {
                if (std::bernoulli_distribution(0.2)(rng)) {
                    w = lexicon[pick(rng)];
                }
            }
            if (std::bernoulli_distribution(0.3)(rng)) {
                h.pop_back();
            }
            hyps.push_back(h);
            refs.push_back(r);
        }
        const double b = corpus_bleu(hyps, refs);
        REQUIRE(b >= 0.0);
        REQUIRE(b <= 100.0);
        REQUIRE(b == doctest::Approx(reference_bleu(hyps, refs)).epsilon(1e-12));

        std::vector<std::size_t> perm(hyps.size());
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<Words> ph;
        std::vector<Words> pr;
        for (auto i : perm) {
            ph.push_back(hyps[i]);
            pr.push_back(refs[i]);
        }
        REQUIRE(corpus_bleu(ph, pr) == doctest::Approx(b).epsilon(1e-12));
    }
}

TEST_CASE("id-sequence bleu strips eos") {
    const auto v = fixtures::letters(5);
    const std::vector<TokenSeq> hyp = {{3, 4, 5, 6, 1}};
    const std::vector<TokenSeq> ref = {{3, 4, 5, 6, 7, 1}};
    CHECK(corpus_bleu(v, hyp, ref) == doctest::Approx(corpus_bleu({words("a b c d")}, {words("a b c d e")})));
}

TEST_CASE("hallucination rate") {
    const TokenId eos = 1;
    const std::vector<TokenSeq> hyp = {{3, 4, 5, 6, 7, eos}};
    const std::vector<Alignment> all = {{{1, 1}, {2, 2}, {3, 3}, {4, 4}, {5, 5}}};
    const std::vector<Alignment> none = {{}};
    const std::vector<Alignment> three = {{{1, 1}, {3, 2}, {5, 4}}};
    CHECK(hallucination_rate(hyp, all, eos) == 0.0);
    CHECK(hallucination_rate(hyp, none, eos) == 1.0);
    CHECK(hallucination_rate(hyp, three, eos) == doctest::Approx(0.4));
    const auto c = hallucination_count(hyp, three, eos);
    CHECK(c.unaligned == 2);
    CHECK(c.total == 5);

    const std::vector<Alignment> extra = {{{1, 1}, {3, 2}, {5, 4}, {1, 3}, {3, 5}, {5, 1}}};
    CHECK(hallucination_rate(hyp, extra, eos) == hallucination_rate(hyp, three, eos));
    CHECK_THROWS_AS(hallucination_rate(hyp, std::vector<Alignment>{}, eos), ValidationError);

    const TokenSeq src = {3, 5, 5, eos};
    const auto links = lexical_alignment(TokenSeq{5, 9, eos}, src, eos);
    CHECK(links == Alignment{{1, 2}, {1, 3}});
}

TEST_CASE("evaluate_run") {
    const auto v = fixtures::letters(6);
    const TokenSeq ref = {3, 4, 5, 6, 1};
    const std::vector<SentenceOutput> perfect = {{ref, {5, 5, 5, 5, 5}, 5}};
    const std::vector<Alignment> diag = {{{1, 1}, {2, 2}, {3, 3}, {4, 4}}};
    const auto r = evaluate_run(v, perfect, std::vector<TokenSeq>{ref}, std::span<const Alignment>(diag));
    CHECK(r.al == 5.0);
    CHECK(r.bleu == doctest::Approx(100.0));
    REQUIRE(r.hallucination_rate.has_value());
    CHECK(*r.hallucination_rate == 0.0);
    CHECK(r.n_sentences == 1);

    CHECK_THROWS(evaluate_run(v, std::vector<SentenceOutput>{}, std::vector<TokenSeq>{}));

    const std::vector<SentenceOutput> mixed = {
        {{3, 4, 6, 5, 1}, {1, 2, 3, 4, 4}, 4},
        {{7, 8, 1}, {2, 3, 3}, 3},
        {{3, 3, 3, 4, 5, 6, 1}, {5, 5, 5, 5, 5, 5, 5}, 5},
    };
    const std::vector<TokenSeq> refs = {{3, 4, 5, 6, 1}, {7, 8, 1}, {3, 3, 3, 4, 5, 6, 7, 1}};
    const std::vector<Alignment> aligns = {{{1, 1}, {2, 2}}, {{1, 1}, {2, 2}}, {{1, 1}}};
    const auto m = evaluate_run(v, mixed, refs, std::span<const Alignment>(aligns));
    double al = 0;
    std::vector<Words> hw;
    std::vector<Words> rw;
    std::vector<TokenSeq> hyps;
    for (std::size_t i = 0; i < mixed.size(); ++i) {
        al += oracle::average_lagging(mixed[i].g_record, mixed[i].source_len,
                                      static_cast<int>(mixed[i].hypothesis.size()));
        hw.push_back(words(v.decode(TokenSeq(mixed[i].hypothesis.begin(), mixed[i].hypothesis.end() - 1))));
        rw.push_back(words(v.decode(TokenSeq(refs[i].begin(), refs[i].end() - 1))));
        hyps.push_back(mixed[i].hypothesis);
    }
    CHECK(m.al == doctest::Approx(al / 3).epsilon(1e-12));
    CHECK(m.bleu == doctest::Approx(reference_bleu(hw, rw)).epsilon(1e-12));
    // 12 non-EOS hypothesis tokens, 5 aligned
    CHECK(*m.hallucination_rate == doctest::Approx(7.0 / 12));
    CHECK(m.n_sentences == 3);

    const std::vector<SentenceOutput> with_empty = {{ref, {5, 5, 5, 5, 5}, 5}, {{}, {}, 3}};
    const auto e = evaluate_run(v, with_empty, std::vector<TokenSeq>{ref, {3, 1}});
    CHECK(e.al == 5.0);
    CHECK(e.al_excluded == 1);
    CHECK(e.n_sentences == 2);
    CHECK_FALSE(e.hallucination_rate.has_value());
}
