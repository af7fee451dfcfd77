#include <gtest/gtest.h>

#include <cmath>

#include "cdp/cdp.hpp"
#include "oracles.hpp"

using namespace cdp;

namespace {

CodebookConfig with_h(int h) {
    CodebookConfig c;
    c.h = h;
    return c;
}

BitMatrix flip(const BitMatrix& t, double q, Rng& rng) {
    BitMatrix out = t;
    for (auto& v : out.values())
        if (rng.bernoulli(q)) v ^= 1U;
    return out;
}

std::vector<Template> templates(std::size_t n, std::size_t L, std::uint64_t seed) {
    std::vector<Template> ts;
    for (std::size_t i = 0; i < n; ++i) ts.push_back(generate_template(L, 0.5, derive_seed(seed, i)));
    return ts;
}

}  // namespace

TEST(Encode, Definition) {
    BitMatrix t(3, 3, 0);
    EXPECT_EQ(encode_neighborhood(t, 1, 1, 3, BorderMode::interior).code, 0u);
    t(1, 1) = 1;
    EXPECT_EQ(encode_neighborhood(t, 1, 1, 3, BorderMode::interior).code, 16u);
    EXPECT_TRUE(encode_neighborhood(t, 1, 1, 3, BorderMode::interior).center_bit());
    BitMatrix b(3, 3, 1);
    EXPECT_EQ(encode_neighborhood(b, 1, 1, 3, BorderMode::interior).code, 511u);
    t(0, 0) = 1;
    EXPECT_EQ(encode_neighborhood(t, 1, 1, 3, BorderMode::interior).code, 256u + 16u);
}

TEST(Encode, MatchesOracleEverywhere) {
    const auto t = generate_template(12, 0.5, 3);
    for (int h : {1, 3, 5}) {
        for (std::size_t i = 0; i < 12; ++i)
            for (std::size_t j = 0; j < 12; ++j)
                EXPECT_EQ(encode_neighborhood(t.symbols, i, j, h, BorderMode::white_pad).code,
                          oracle::code_at(t.symbols, i, j, h));
    }
}

TEST(Encode, BorderModes) {
    BitMatrix t(4, 4, 1);
    EXPECT_THROW(encode_neighborhood(t, 0, 1, 3, BorderMode::interior), DimensionError);
    // white padding: top row of the window is outside and reads white
    EXPECT_EQ(encode_neighborhood(t, 0, 1, 3, BorderMode::white_pad).code, 0b000111111u);
    EXPECT_THROW(encode_neighborhood(t, 1, 1, 4, BorderMode::interior), ParameterError);
    EXPECT_THROW(encode_neighborhood(t, 1, 1, 9, BorderMode::white_pad), ParameterError);
    EXPECT_EQ(parse_border_mode("white_pad"), BorderMode::white_pad);
    EXPECT_THROW(parse_border_mode("mirror"), ParameterError);
}

TEST(Train, IdentityChannel) {
    const auto ts = templates(5, 20, 1);
    std::vector<BitMatrix> est;
    for (const auto& t : ts) est.push_back(t.symbols);
    const auto cb = train_from_estimates(ts, est, CodebookConfig{});
    EXPECT_EQ(cb.global().count, 5u * 18 * 18);
    for (const auto& [code, e] : cb.entries()) {
        const bool center = (code >> 4) & 1U;
        EXPECT_EQ(e.pb(), 0.0);
        EXPECT_EQ(e.p(), center ? 1.0 : 0.0);
    }
}

TEST(Train, CenterBitIdentity) {
    Rng rng(9);
    const auto ts = templates(10, 24, 2);
    std::vector<BitMatrix> est;
    for (const auto& t : ts) est.push_back(flip(t.symbols, 0.2, rng));
    const auto cb = train_from_estimates(ts, est, CodebookConfig{});
    for (const auto& [code, e] : cb.entries()) {
        const bool center = (code >> 4) & 1U;
        EXPECT_DOUBLE_EQ(e.pb(), center ? 1.0 - e.p() : e.p());
    }
}

TEST(Train, BscConcentration) {
    Rng rng(77);
    const auto ts = templates(10, 100, 3);
    std::vector<BitMatrix> est;
    for (const auto& t : ts) est.push_back(flip(t.symbols, 0.1, rng));
    const auto cb = train_from_estimates(ts, est, CodebookConfig{});
    std::size_t n = 0, inside = 0;
    for (const auto& [code, e] : cb.entries()) {
        if (e.count < 100) continue;
        ++n;
        inside += std::abs(e.pb() - 0.1) <= 3 * std::sqrt(0.09 / static_cast<double>(e.count));
    }
    ASSERT_GT(n, 400u);
    EXPECT_GE(static_cast<double>(inside) / static_cast<double>(n), 0.98);
}

TEST(Train, OrderInvariant) {
    Rng rng(4);
    auto ts = templates(8, 20, 4);
    std::vector<BitMatrix> est;
    for (const auto& t : ts) est.push_back(flip(t.symbols, 0.15, rng));
    const auto a = train_from_estimates(ts, est, CodebookConfig{});
    std::reverse(ts.begin(), ts.end());
    std::reverse(est.begin(), est.end());
    EXPECT_EQ(train_from_estimates(ts, est, CodebookConfig{}), a);
}

TEST(Train, Errors) {
    std::vector<Template> none;
    std::vector<BitMatrix> none_est;
    EXPECT_THROW(train_from_estimates(none, none_est, CodebookConfig{}), ParameterError);
    const auto ts = templates(2, 8, 1);
    std::vector<BitMatrix> one{ts[0].symbols};
    EXPECT_THROW(train_from_estimates(ts, one, CodebookConfig{}), DimensionError);
    std::vector<PrintedImage> wrong{PrintedImage{ImageMatrix(8, 8), 3, "x"}, PrintedImage{ImageMatrix(8, 8), 3, "x"}};
    EXPECT_THROW(train_codebook(ts, wrong, CodebookConfig{}), DimensionError);
}

TEST(Train, PrinterAFullSizeCoverage) {
    std::vector<Template> ts = templates(50, 228, 5);
    std::vector<PrintedImage> xs;
    for (std::size_t i = 0; i < ts.size(); ++i) xs.push_back(print_code(ts[i], printer_a().with_seed(derive_seed(6, i))));
    const auto cb = train_codebook(ts, xs, CodebookConfig{}, otsu_majority_estimator(), 0);
    EXPECT_EQ(cb.entries().size(), 512u);
    EXPECT_EQ(cb.global().count, 50u * 51076);
    const double mean = static_cast<double>(cb.global().count) / 512.0;
    EXPECT_NEAR(mean, 4988, 1);
    EXPECT_EQ(cb.config().lineage, xs[0].source_id);
    EXPECT_EQ(cb.config().estimator_id, kOtsuMajorityId);
}

TEST(Query, ClampAndFallback) {
    Codebook cb(CodebookConfig{});
    cb.add_entry(16, {10, 10, 0});
    cb.add_entry(0, {10, 7, 7});
    const auto q = cb.query({16, 3});
    EXPECT_DOUBLE_EQ(q.p, 0.9999);
    EXPECT_DOUBLE_EQ(q.pb, 1e-4);
    EXPECT_FALSE(q.fallback);
    EXPECT_EQ(cb.lookup(0).p, 0.7);
    const auto unseen = cb.query({5, 3});
    EXPECT_TRUE(unseen.fallback);
    EXPECT_DOUBLE_EQ(unseen.p, 17.0 / 20.0);
    EXPECT_DOUBLE_EQ(unseen.pb, 7.0 / 20.0);
    EXPECT_THROW(cb.query({5, 5}), CompatibilityError);
    EXPECT_EQ(cb.query({0, 3}).p, cb.query({0, 3}).p);
}

TEST(Query, RejectsInconsistentEntries) {
    Codebook cb(CodebookConfig{});
    EXPECT_THROW(cb.add_entry(512, {1, 0, 0}), ParameterError);
    EXPECT_THROW(cb.add_entry(3, {1, 2, 0}), ParameterError);
    EXPECT_THROW(Codebook(with_h(2)), ParameterError);
}

TEST(Merge, IdentityAndWeightedMean) {
    Codebook a(CodebookConfig{}), b(CodebookConfig{});
    a.observe(0, false, false);
    b.observe(0, false, true);
    const auto m = merge(a, b);
    EXPECT_EQ(m.entries().at(0).count, 2u);
    EXPECT_EQ(m.entries().at(0).p(), 0.5);
    EXPECT_EQ(merge(a, Codebook(CodebookConfig{})), a);
}

TEST(Merge, CommutativeAssociative) {
    Rng rng(8);
    const auto ts = templates(9, 16, 7);
    std::vector<Codebook> parts;
    for (std::size_t i = 0; i < 3; ++i) {
        std::vector<Template> sub(ts.begin() + static_cast<long>(3 * i), ts.begin() + static_cast<long>(3 * i + 3));
        std::vector<BitMatrix> est;
        for (const auto& t : sub) est.push_back(flip(t.symbols, 0.2, rng));
        parts.push_back(train_from_estimates(sub, est, CodebookConfig{}));
    }
    EXPECT_EQ(merge(parts[0], parts[1]), merge(parts[1], parts[0]));
    EXPECT_EQ(merge(merge(parts[0], parts[1]), parts[2]), merge(parts[0], merge(parts[1], parts[2])));
}

TEST(Merge, HalvesEqualWhole) {
    const auto ts = templates(10, 32, 8);
    std::vector<PrintedImage> xs;
    for (std::size_t i = 0; i < ts.size(); ++i) xs.push_back(print_code(ts[i], printer_b().with_seed(i)));
    const auto all = train_codebook(ts, xs, CodebookConfig{});
    const auto first = train_codebook(std::span(ts).first(5), std::span(xs).first(5), CodebookConfig{});
    const auto second = train_codebook(std::span(ts).last(5), std::span(xs).last(5), CodebookConfig{});
    EXPECT_EQ(merge(first, second), all);
}

TEST(Merge, ConfigMismatch) {
    CodebookConfig c5;
    c5.h = 5;
    CodebookConfig other_est;
    other_est.estimator_id = "x";
    CodebookConfig other_line;
    other_line.lineage = "print:abc";
    CodebookConfig pad;
    pad.border = BorderMode::white_pad;
    const Codebook base(CodebookConfig{});
    for (const auto& c : {c5, other_est, other_line, pad}) EXPECT_THROW(merge(base, Codebook(c)), CompatibilityError);
}

TEST(Distance, Basics) {
    Codebook a(CodebookConfig{}), b(CodebookConfig{});
    a.add_entry(7, {10, 3, 3});
    b.add_entry(7, {10, 5, 5});
    EXPECT_DOUBLE_EQ(codebook_distance(a, b), 0.2);
    EXPECT_EQ(codebook_distance(a, a), 0.0);
    // a code missing on one side is compared against that side's global mean
    b.add_entry(9, {10, 5, 5});
    EXPECT_DOUBLE_EQ(codebook_distance(a, b), 0.2);
    EXPECT_THROW(codebook_distance(a, Codebook(with_h(5))), CompatibilityError);
}

TEST(Train, ParallelMatchesSerial) {
    const auto ts = templates(6, 24, 12);
    std::vector<PrintedImage> xs;
    for (std::size_t i = 0; i < ts.size(); ++i) xs.push_back(print_code(ts[i], printer_a().with_seed(i)));
    EXPECT_EQ(train_codebook(ts, xs, CodebookConfig{}, otsu_majority_estimator(), 1),
              train_codebook(ts, xs, CodebookConfig{}, otsu_majority_estimator(), 4));
}
