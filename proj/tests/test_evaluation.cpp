#include <gtest/gtest.h>

#include <algorithm>

#include "cdp/cdp.hpp"
#include "oracles.hpp"

using namespace cdp;

TEST(Auc, Examples) {
    EXPECT_EQ(auc(std::vector{0.9, 0.8}, std::vector{0.2, 0.1}), 1.0);
    EXPECT_EQ(auc(std::vector{0.3, 0.5, 0.7}, std::vector{0.3, 0.5, 0.7}), 0.5);
    EXPECT_EQ(auc(std::vector{0.8, 0.4}, std::vector{0.6, 0.2}), 0.75);
    EXPECT_THROW(auc(std::vector<double>{}, std::vector{1.0}), ParameterError);
}

TEST(Auc, PairCountingOracle) {
    Rng rng(1);
    for (int n = 0; n < 300; ++n) {
        const bool coarse = n % 3 == 0;
        const auto o = oracle::random_scores(rng, 1 + rng.below(100), 0.7, coarse);
        const auto f = oracle::random_scores(rng, 1 + rng.below(100), 0.0, coarse);
        ASSERT_EQ(auc(o, f), oracle::auc_pairs(o, f));
        ASSERT_NEAR(trapezoid_area(roc_curve(o, f)), auc(o, f), 1e-12);
    }
}

TEST(Auc, RankPathAgreesWithPairs) {
    Rng rng(2);
    const auto o = oracle::random_scores(rng, 6000, 0.5, false);
    auto f = oracle::random_scores(rng, 6000, 0.0, false);
    f[0] = o[0];
    EXPECT_NEAR(auc(o, f), oracle::auc_pairs(o, f), 1e-12);
    const auto oc = oracle::random_scores(rng, 6000, 1.0, true);
    const auto fc = oracle::random_scores(rng, 6000, 0.0, true);
    EXPECT_NEAR(auc(oc, fc), oracle::auc_pairs(oc, fc), 1e-12);
}

TEST(Roc, Shapes) {
    const auto perfect = roc_curve(std::vector{0.9, 0.8}, std::vector{0.2, 0.1});
    EXPECT_TRUE(std::any_of(perfect.begin(), perfect.end(), [](const RocPoint& p) { return p.fpr == 0 && p.tpr == 1; }));
    EXPECT_EQ(perfect.front().fpr, 0.0);
    EXPECT_EQ(perfect.back().tpr, 1.0);
    EXPECT_EQ(perfect.back().fpr, 1.0);
    const auto diag = roc_curve(std::vector{0.1, 0.5, 0.9}, std::vector{0.1, 0.5, 0.9});
    for (const auto& p : diag) EXPECT_EQ(p.fpr, p.tpr);
}

TEST(Threshold, GapMidpoint) {
    const auto c = select_threshold(std::vector{0.9, 0.8}, std::vector{0.2, 0.1});
    EXPECT_DOUBLE_EQ(c.threshold, 0.5);
    EXPECT_EQ(c.fpr, 0.0);
    EXPECT_EQ(c.fnr, 0.0);
}

TEST(Threshold, IdenticalDistributions) {
    Rng rng(3);
    const auto s = oracle::random_scores(rng, 200, 0.0, false);
    const auto c = select_threshold(s, s);
    EXPECT_NEAR((c.fpr + c.fnr) / 2, 0.5, 0.01);
}

TEST(Threshold, EerMatchesScan) {
    Rng rng(4);
    for (int n = 0; n < 20; ++n) {
        const auto o = oracle::random_scores(rng, 50, 1.0, n % 2 == 0);
        const auto f = oracle::random_scores(rng, 50, 0.0, n % 2 == 0);
        // exhaustive scan: every score value plus +-inf
        std::vector<double> cand(o);
        cand.insert(cand.end(), f.begin(), f.end());
        cand.push_back(-1e300);
        cand.push_back(1e300);
        double best_gap = 2, best_fpr = 2;
        for (double thr : cand) {
            const double fpr = static_cast<double>(std::count_if(f.begin(), f.end(), [&](double s) { return s >= thr; })) / 50;
            const double fnr = static_cast<double>(std::count_if(o.begin(), o.end(), [&](double s) { return s < thr; })) / 50;
            const double gap = std::abs(fpr - fnr);
            if (gap < best_gap || (gap == best_gap && fpr < best_fpr)) {
                best_gap = gap;
                best_fpr = fpr;
            }
        }
        const auto c = select_threshold(o, f);
        EXPECT_EQ(std::abs(c.fpr - c.fnr), best_gap);
        EXPECT_EQ(c.fpr, best_fpr);
    }
}

TEST(Threshold, TprAtFpr) {
    const std::vector<double> o{5, 6, 7, 8}, f{1, 2, 3, 6.5};
    const auto c = select_threshold(o, f, ThresholdRule::tpr_at(0.0));
    EXPECT_EQ(c.fpr, 0.0);
    EXPECT_EQ(c.fnr, 0.5);
    EXPECT_EQ(select_threshold(o, f, ThresholdRule::tpr_at(0.25)).fnr, 0.0);
    EXPECT_THROW(select_threshold(std::vector<double>{}, f), ParameterError);
}

TEST(Stats, MeanStdAndAccuracy) {
    const auto [m, s] = mean_std(std::vector{1.0, 2.0, 3.0});
    EXPECT_DOUBLE_EQ(m, 2.0);
    EXPECT_DOUBLE_EQ(s, 1.0);
    EXPECT_DOUBLE_EQ(balanced_accuracy(std::vector{1.0, 2.0}, std::vector{0.0, 1.5}, 1.2), 0.5);
    EXPECT_DOUBLE_EQ(balanced_accuracy(std::vector{1.0, 2.0}, std::vector{0.0, 1.5}, 0.5), 0.75);
}

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.n_templates = 30;
    cfg.L = 32;
    cfg.n_train = 10;
    cfg.n_val = 10;
    cfg.n_test = 10;
    cfg.seeds = {1};
    return cfg;
}

}  // namespace

TEST(Experiment, TotalIsMeanOfCells) {
    const auto rep = run_experiment(small_config());
    ASSERT_EQ(rep.runs.size(), 2u * 4 * 8);
    ASSERT_EQ(rep.cells.size(), 2u * 4 * 8);
    for (auto m : rep.metrics) {
        double sum = 0;
        int n = 0;
        for (const auto& c : rep.cells)
            if (c.metric == m) {
                sum += c.auc_mean;
                ++n;
            }
        EXPECT_EQ(n, 8);
        EXPECT_NEAR(rep.total_average.at(m), sum / 8, 1e-12);
        EXPECT_NEAR(rep.total_average.at(m), (rep.printer_average.at({'A', m}) + rep.printer_average.at({'B', m})) / 2,
                    1e-12);
    }
    for (const auto& r : rep.runs) {
        EXPECT_GE(r.auc, 0.0);
        EXPECT_LE(r.auc, 1.0);
        EXPECT_GE(r.test_accuracy, 0.0);
        EXPECT_LE(r.test_accuracy, 1.0);
    }
}

TEST(Experiment, ClonableChannelHasNoSeparation) {
    auto cfg = small_config();
    cfg.printer_a = {3, 0.05, 1.0, 0.0, 0};
    cfg.printer_b = {3, 0.05, 1.0, 0.0, 0};
    const auto rep = run_experiment(cfg);
    for (const auto& c : rep.cells) EXPECT_EQ(c.auc_mean, 0.5) << to_string(c.metric);
}

TEST(Experiment, Deterministic) {
    auto cfg = small_config();
    cfg.threads = 3;
    const auto a = run_experiment(cfg);
    cfg.threads = 1;
    const auto b = run_experiment(cfg);
    ASSERT_EQ(a.runs.size(), b.runs.size());
    for (std::size_t i = 0; i < a.runs.size(); ++i) {
        EXPECT_EQ(a.runs[i].auc, b.runs[i].auc);
        EXPECT_EQ(a.runs[i].threshold, b.runs[i].threshold);
    }
}

TEST(Experiment, MuSearchPicksFromGrid) {
    auto cfg = small_config();
    cfg.metrics = {MetricId::M_LLS};
    cfg.mu_search = true;
    const auto rep = run_experiment(cfg);
    for (const auto& r : rep.runs) {
        EXPECT_GE(r.mu, 0.05 - 1e-12);
        EXPECT_LE(r.mu, 0.5 + 1e-12);
    }
}

TEST(Experiment, Validation) {
    auto cfg = small_config();
    cfg.n_test = 100;
    EXPECT_THROW(run_experiment(cfg), ParameterError);
    cfg = small_config();
    cfg.seeds.clear();
    EXPECT_THROW(run_experiment(cfg), ParameterError);
    cfg = small_config();
    cfg.printer_b.k = 4;
    EXPECT_THROW(run_experiment(cfg), ParameterError);
}

TEST(Stability, FullSubsetIsZeroAndTrendDecreases) {
    StabilityConfig cfg;
    cfg.L = 32;
    const std::vector<std::size_t> sizes{1, 5, 20, 60};
    const auto curve = stability_study(sizes, 60, 5, cfg);
    ASSERT_EQ(curve.size(), 4u);
    EXPECT_EQ(curve.back().mean_d1, 0.0);
    for (std::size_t i = 1; i < curve.size(); ++i) EXPECT_LE(curve[i].mean_d1, curve[i - 1].mean_d1 * 1.1);
    EXPECT_THROW(stability_study(std::vector<std::size_t>{61}, 60, 5, cfg), ParameterError);
    EXPECT_THROW(stability_study(std::vector<std::size_t>{}, 60, 5, cfg), ParameterError);
}
