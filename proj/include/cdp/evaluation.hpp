#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "cdp/channel.hpp"
#include "cdp/codebook.hpp"
#include "cdp/error.hpp"
#include "cdp/estimator.hpp"
#include "cdp/metrics.hpp"
#include "cdp/parallel.hpp"
#include "cdp/rng.hpp"
#include "cdp/template_gen.hpp"

namespace cdp {

// ---------------------------------------------------------------------------
// ROC / AUC. All scores are on the higher-is-original axis.
// ---------------------------------------------------------------------------

inline void check_score_sets(std::span<const double> orig, std::span<const double> fake) {
    if (orig.empty() || fake.empty()) throw ParameterError("score sets must be non-empty");
}

/// P(original > fake) + 0.5 P(tie). Exact pair counting up to 10^4 scores,
/// mid-rank Mann-Whitney beyond that.
inline double auc(std::span<const double> orig, std::span<const double> fake) {
    check_score_sets(orig, fake);
    const double pairs = static_cast<double>(orig.size()) * static_cast<double>(fake.size());
    if (orig.size() + fake.size() <= 10000) {
        std::uint64_t twice_wins = 0;
        for (double o : orig)
            for (double f : fake) twice_wins += o > f ? 2 : (o == f ? 1 : 0);
        return static_cast<double>(twice_wins) / (2.0 * pairs);
    }
    std::vector<std::pair<double, bool>> all;
    all.reserve(orig.size() + fake.size());
    for (double o : orig) all.emplace_back(o, true);
    for (double f : fake) all.emplace_back(f, false);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        while (j < all.size() && all[j].first == all[i].first) ++j;
        const double mid = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t q = i; q < j; ++q)
            if (all[q].second) rank_sum += mid;
        i = j;
    }
    const double n = static_cast<double>(orig.size());
    return (rank_sum - n * (n + 1.0) / 2.0) / pairs;
}

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;  ///< decide "original" when score >= threshold
};

/// Operating points at every distinct score, from (0,0) to (1,1).
inline std::vector<RocPoint> roc_curve(std::span<const double> orig, std::span<const double> fake) {
    check_score_sets(orig, fake);
    std::vector<double> o(orig.begin(), orig.end()), f(fake.begin(), fake.end());
    std::sort(o.begin(), o.end(), std::greater<>());
    std::sort(f.begin(), f.end(), std::greater<>());
    std::vector<double> thresholds;
    std::merge(o.begin(), o.end(), f.begin(), f.end(), std::back_inserter(thresholds), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    const double no = static_cast<double>(o.size()), nf = static_cast<double>(f.size());
    std::vector<RocPoint> curve;
    curve.push_back({0.0, 0.0, thresholds.empty() ? 0.0 : std::nextafter(thresholds.front(), HUGE_VAL)});
    std::size_t io = 0, jf = 0;
    for (double thr : thresholds) {
        while (io < o.size() && o[io] >= thr) ++io;
        while (jf < f.size() && f[jf] >= thr) ++jf;
        curve.push_back({static_cast<double>(jf) / nf, static_cast<double>(io) / no, thr});
    }
    return curve;
}

inline double trapezoid_area(std::span<const RocPoint> curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i)
        area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) / 2.0;
    return area;
}

struct ThresholdRule {
    enum class Kind { eer, tpr_at_fpr } kind = Kind::eer;
    double alpha = 0.01;  ///< FPR ceiling for tpr_at_fpr

    static ThresholdRule eer() { return {}; }
    static ThresholdRule tpr_at(double alpha) { return {Kind::tpr_at_fpr, alpha}; }
};

struct ThresholdChoice {
    double threshold = 0.0;
    double fpr = 0.0;
    double fnr = 0.0;
};

/// Candidate thresholds: midpoints between consecutive distinct scores, plus
/// one below the minimum and one above the maximum.
inline std::vector<double> candidate_thresholds(std::span<const double> orig, std::span<const double> fake) {
    std::vector<double> all(orig.begin(), orig.end());
    all.insert(all.end(), fake.begin(), fake.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    std::vector<double> cands;
    cands.reserve(all.size() + 1);
    cands.push_back(all.front() - 1.0);
    for (std::size_t i = 1; i < all.size(); ++i) cands.push_back(all[i - 1] + (all[i] - all[i - 1]) / 2.0);
    cands.push_back(all.back() + 1.0);
    return cands;
}

inline ThresholdChoice evaluate_threshold(std::span<const double> orig, std::span<const double> fake, double thr) {
    const auto fp = std::count_if(fake.begin(), fake.end(), [&](double s) { return s >= thr; });
    const auto fn = std::count_if(orig.begin(), orig.end(), [&](double s) { return s < thr; });
    return {thr, static_cast<double>(fp) / static_cast<double>(fake.size()),
            static_cast<double>(fn) / static_cast<double>(orig.size())};
}

/// Validation-set operating threshold; ties go to the lower FPR.
inline ThresholdChoice select_threshold(std::span<const double> val_orig, std::span<const double> val_fake,
                                        ThresholdRule rule = ThresholdRule::eer()) {
    check_score_sets(val_orig, val_fake);
    ThresholdChoice best;
    bool have = false;
    for (double thr : candidate_thresholds(val_orig, val_fake)) {
        const ThresholdChoice c = evaluate_threshold(val_orig, val_fake, thr);
        bool better;
        if (rule.kind == ThresholdRule::Kind::eer) {
            const double gap = std::abs(c.fpr - c.fnr), best_gap = std::abs(best.fpr - best.fnr);
            better = !have || gap < best_gap || (gap == best_gap && c.fpr < best.fpr);
        } else {
            if (c.fpr > rule.alpha) continue;
            better = !have || c.fnr < best.fnr || (c.fnr == best.fnr && c.fpr < best.fpr);
        }
        if (better) {
            best = c;
            have = true;
        }
    }
    if (!have) throw ParameterError("select_threshold: no threshold satisfies the FPR ceiling");
    return best;
}

inline std::vector<double> oriented(std::span<const Score> scores) {
    std::vector<double> out;
    out.reserve(scores.size());
    for (const auto& s : scores) out.push_back(s.oriented());
    return out;
}

inline std::pair<double, double> mean_std(std::span<const double> v) {
    if (v.empty()) return {0.0, 0.0};
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0};
}

// ---------------------------------------------------------------------------
// Experiment grid: 2 printers x 4 fake types x metrics, repeated over seeds.
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    std::size_t n_templates = 100;
    std::size_t L = 64;
    double density = 0.5;
    std::size_t n_train = 20;
    std::size_t n_val = 20;
    std::size_t n_test = 60;
    ChannelParams printer_a = cdp::printer_a();
    ChannelParams printer_b = cdp::printer_b();
    std::vector<MetricId> metrics{kAllMetrics.begin(), kAllMetrics.end()};
    int h = 3;
    BorderMode border = BorderMode::interior;
    double mu = 0.25;
    bool mu_search = false;
    double epsilon = 1e-4;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    unsigned threads = 1;

    void validate() const {
        if (n_train == 0 || n_val == 0 || n_test == 0) throw ParameterError("experiment: every split needs >= 1 template");
        if (n_train + n_val + n_test > n_templates) throw ParameterError("experiment: splits exceed n_templates");
        if (seeds.empty()) throw ParameterError("experiment: no run seeds");
        if (metrics.empty()) throw ParameterError("experiment: no metrics");
        if (printer_a.k != printer_b.k) throw ParameterError("experiment: printers must share k");
        printer_a.validate();
        printer_b.validate();
        check_codebook_h(h);
        if (static_cast<std::size_t>(h) > L) throw ParameterError("experiment: h exceeds L");
    }
};

inline constexpr std::array<char, 2> kPrinters{'A', 'B'};

/// Fake f^{m/n}: estimated from an original of printer n, reprinted on m.
struct FakeType {
    char reprint;
    char source;
    std::string label() const { return std::string("f^{") + reprint + "/" + source + "}"; }
    std::string short_label() const { return std::string(1, reprint) + "/" + source; }
};

inline constexpr std::array<FakeType, 4> kFakeTypes{FakeType{'A', 'A'}, FakeType{'A', 'B'}, FakeType{'B', 'A'},
                                                    FakeType{'B', 'B'}};

struct RunRecord {
    std::uint64_t seed = 0;
    char printer = 'A';
    FakeType fake{'A', 'A'};
    MetricId metric = MetricId::LLS;
    double auc = 0.0;
    double threshold = 0.0;      ///< EER threshold chosen on validation
    double test_accuracy = 0.0;  ///< balanced accuracy on test at that threshold
    double mu = 0.0;
    std::size_t fallbacks = 0;
};

struct CellSummary {
    char printer = 'A';
    FakeType fake{'A', 'A'};
    MetricId metric = MetricId::LLS;
    double auc_mean = 0.0;
    double auc_std = 0.0;
};

struct EvalReport {
    std::vector<RunRecord> runs;
    std::vector<CellSummary> cells;
    std::map<std::pair<char, MetricId>, double> printer_average;
    std::map<MetricId, double> total_average;
    /// ROC curves of the first seed, keyed by (printer, fake index, metric).
    std::map<std::tuple<char, int, MetricId>, std::vector<RocPoint>> roc;
    std::vector<MetricId> metrics;

    double mean_auc(MetricId m) const { return total_average.at(m); }
};

/// Recompute per-cell, per-printer and total aggregates from the run records.
inline void summarize(EvalReport& rep) {
    rep.cells.clear();
    rep.printer_average.clear();
    rep.total_average.clear();
    for (char p : kPrinters)
        for (const FakeType& f : kFakeTypes)
            for (MetricId m : rep.metrics) {
                std::vector<double> v;
                for (const auto& r : rep.runs)
                    if (r.printer == p && r.fake.reprint == f.reprint && r.fake.source == f.source && r.metric == m)
                        v.push_back(r.auc);
                const auto [mean, sd] = mean_std(v);
                rep.cells.push_back({p, f, m, mean, sd});
            }
    for (MetricId m : rep.metrics) {
        double total = 0.0;
        for (char p : kPrinters) {
            double sum = 0.0;
            for (const auto& c : rep.cells)
                if (c.printer == p && c.metric == m) sum += c.auc_mean;
            rep.printer_average[{p, m}] = sum / static_cast<double>(kFakeTypes.size());
            total += sum;
        }
        rep.total_average[m] = total / static_cast<double>(kPrinters.size() * kFakeTypes.size());
    }
}

namespace detail {

// Stream tags for derive_seed; fixed so datasets are reproducible.
enum : std::uint64_t {
    kTagTemplates = 1,
    kTagPrintA = 2,
    kTagPrintB = 3,
    kTagFake = 4,
    kTagSplit = 5,
};

inline const ChannelParams& printer_params(const ExperimentConfig& cfg, char p) {
    return p == 'A' ? cfg.printer_a : cfg.printer_b;
}

struct ProbeSet {
    std::vector<PrintedImage> images;
    std::vector<EstimatedTemplate> estimates;
};

}  // namespace detail

/// Balanced accuracy of the rule "score >= thr is original".
inline double balanced_accuracy(std::span<const double> orig, std::span<const double> fake, double thr) {
    const ThresholdChoice c = evaluate_threshold(orig, fake, thr);
    return 1.0 - (c.fpr + c.fnr) / 2.0;
}

inline EvalReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const Estimator estimator = otsu_majority_estimator();
    const int k = cfg.printer_a.k;
    EvalReport rep;
    rep.metrics = cfg.metrics;

    for (std::size_t run = 0; run < cfg.seeds.size(); ++run) {
        const std::uint64_t seed = cfg.seeds[run];
        const std::size_t N = cfg.n_templates;

        std::vector<Template> templates(N);
        parallel_for(N, cfg.threads, [&](std::size_t i) {
            templates[i] = generate_template(cfg.L, cfg.density, derive_seed(derive_seed(seed, detail::kTagTemplates), i));
        });

        std::vector<std::size_t> order(N);
        std::iota(order.begin(), order.end(), 0);
        Rng split_rng(derive_seed(seed, detail::kTagSplit));
        split_rng.shuffle(order);
        const std::span<const std::size_t> train(order.data(), cfg.n_train);
        const std::span<const std::size_t> val(order.data() + cfg.n_train, cfg.n_val);
        const std::span<const std::size_t> test(order.data() + cfg.n_train + cfg.n_val, cfg.n_test);
        std::vector<std::size_t> probes(val.begin(), val.end());
        probes.insert(probes.end(), test.begin(), test.end());

        // Originals for every template on both printers.
        std::map<char, detail::ProbeSet> originals;
        for (char p : kPrinters) {
            auto& set = originals[p];
            set.images.resize(N);
            set.estimates.resize(N);
            const std::uint64_t tag = p == 'A' ? detail::kTagPrintA : detail::kTagPrintB;
            const ChannelParams& params = detail::printer_params(cfg, p);
            parallel_for(N, cfg.threads, [&](std::size_t i) {
                set.images[i] = print_code(templates[i], params.with_seed(derive_seed(derive_seed(seed, tag), i)));
                set.estimates[i] = estimator(set.images[i], k);
            });
        }

        // Fakes only for validation and test templates.
        std::vector<detail::ProbeSet> fakes(kFakeTypes.size());
        for (std::size_t f = 0; f < kFakeTypes.size(); ++f) {
            auto& set = fakes[f];
            set.images.resize(N);
            set.estimates.resize(N);
            const ChannelParams& reprint = detail::printer_params(cfg, kFakeTypes[f].reprint);
            const auto& source = originals[kFakeTypes[f].source];
            const std::uint64_t stream = derive_seed(derive_seed(seed, detail::kTagFake), f);
            parallel_for(probes.size(), cfg.threads, [&](std::size_t q) {
                const std::size_t i = probes[q];
                set.images[i] = make_fake(source.images[i], reprint.with_seed(derive_seed(stream, i)), estimator);
                set.estimates[i] = estimator(set.images[i], k);
            });
        }

        for (char p : kPrinters) {
            const auto& orig = originals[p];
            CodebookConfig cb_cfg{cfg.h, k, estimator.id(), cfg.border, cfg.epsilon, {}};
            std::vector<Template> train_t;
            std::vector<BitMatrix> train_e;
            for (std::size_t i : train) {
                train_t.push_back(templates[i]);
                train_e.push_back(orig.estimates[i].symbols);
            }
            cb_cfg.lineage = orig.images[train.front()].source_id;
            const Codebook cb = train_from_estimates(train_t, train_e, cb_cfg);

            // scores[set][metric][template]; set 0 = originals, 1..4 = fakes.
            auto score_sets = [&](double mu) {
                std::vector<AttentionMask> masks(N);
                parallel_for(probes.size(), cfg.threads, [&](std::size_t q) {
                    masks[probes[q]] = build_mask(templates[probes[q]], cb, mu);
                });
                std::vector<std::vector<std::vector<Score>>> scores(
                    1 + kFakeTypes.size(), std::vector<std::vector<Score>>(cfg.metrics.size(), std::vector<Score>(N)));
                for (std::size_t s = 0; s <= kFakeTypes.size(); ++s) {
                    const auto& set = s == 0 ? orig : fakes[s - 1];
                    parallel_for(probes.size(), cfg.threads, [&](std::size_t q) {
                        const std::size_t i = probes[q];
                        const ProbeContext ctx{templates[i], set.images[i], set.estimates[i], cb, masks[i], k};
                        for (std::size_t m = 0; m < cfg.metrics.size(); ++m)
                            scores[s][m][i] = score_probe(cfg.metrics[m], ctx);
                    });
                }
                return scores;
            };
            auto collect = [&](const std::vector<Score>& all, std::span<const std::size_t> idx) {
                std::vector<double> v;
                v.reserve(idx.size());
                for (std::size_t i : idx) v.push_back(all[i].oriented());
                return v;
            };

            double mu = cfg.mu;
            if (cfg.mu_search) {
                // Pick mu maximizing mean validation AUC of the masked metrics.
                double best = -1.0;
                for (int step = 1; step <= 10; ++step) {
                    const double cand = 0.05 * step;
                    const auto sc = score_sets(cand);
                    double sum = 0.0;
                    int n = 0;
                    for (std::size_t m = 0; m < cfg.metrics.size(); ++m) {
                        if (!is_masked(cfg.metrics[m])) continue;
                        for (std::size_t f = 1; f <= kFakeTypes.size(); ++f, ++n)
                            sum += auc(collect(sc[0][m], val), collect(sc[f][m], val));
                    }
                    const double mean = n ? sum / n : 0.0;
                    if (mean > best) {
                        best = mean;
                        mu = cand;
                    }
                }
            }

            const auto scores = score_sets(mu);
            for (std::size_t f = 0; f < kFakeTypes.size(); ++f) {
                for (std::size_t m = 0; m < cfg.metrics.size(); ++m) {
                    const auto vo = collect(scores[0][m], val), vf = collect(scores[f + 1][m], val);
                    const auto to = collect(scores[0][m], test), tf = collect(scores[f + 1][m], test);
                    RunRecord r;
                    r.seed = seed;
                    r.printer = p;
                    r.fake = kFakeTypes[f];
                    r.metric = cfg.metrics[m];
                    r.auc = auc(to, tf);
                    r.threshold = select_threshold(vo, vf).threshold;
                    r.test_accuracy = balanced_accuracy(to, tf, r.threshold);
                    r.mu = mu;
                    for (std::size_t i : test) r.fallbacks += scores[0][m][i].fallback_count;
                    rep.runs.push_back(r);
                    if (run == 0) rep.roc[{p, static_cast<int>(f), cfg.metrics[m]}] = roc_curve(to, tf);
                }
            }
        }
    }
    summarize(rep);
    return rep;
}

// ---------------------------------------------------------------------------
// Codebook stability versus training-set size.
// ---------------------------------------------------------------------------

struct StabilityConfig {
    std::size_t L = 64;
    double density = 0.5;
    ChannelParams printer = cdp::printer_a();
    int h = 3;
    BorderMode border = BorderMode::interior;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

struct StabilityPoint {
    std::size_t size = 0;
    double mean_d1 = 0.0;
    double std_d1 = 0.0;
    std::vector<double> d1;
};

/// Per-pair codebooks of a simulated dataset of n pairs, in index order.
inline std::vector<Codebook> per_pair_codebooks(std::size_t n, const StabilityConfig& cfg) {
    const Estimator estimator = otsu_majority_estimator();
    std::vector<Codebook> books(n);
    const ChannelParams& pr = cfg.printer;
    pr.validate();
    parallel_for(n, cfg.threads, [&](std::size_t i) {
        const Template t = generate_template(cfg.L, cfg.density, derive_seed(derive_seed(cfg.seed, detail::kTagTemplates), i));
        const PrintedImage x = print_code(t, pr.with_seed(derive_seed(derive_seed(cfg.seed, detail::kTagPrintA), i)));
        Codebook cb(CodebookConfig{cfg.h, pr.k, estimator.id(), cfg.border, 1e-4, x.source_id});
        accumulate(cb, t.symbols, estimator(x, pr.k).symbols);
        books[i] = std::move(cb);
    });
    return books;
}

inline Codebook merge_all(std::span<const Codebook> books, std::span<const std::size_t> idx) {
    Codebook out(books[idx.front()].config());
    for (std::size_t i : idx) out = merge(out, books[i]);
    return out;
}

/// For every size, draw `repeats` random subsets without replacement and
/// measure codebook_distance to the codebook trained on all n_reference pairs.
inline std::vector<StabilityPoint> stability_study(std::span<const std::size_t> sizes, std::size_t n_reference,
                                                   std::size_t repeats, const StabilityConfig& cfg) {
    if (sizes.empty() || n_reference == 0 || repeats == 0) throw ParameterError("stability: empty study");
    for (std::size_t s : sizes)
        if (s == 0 || s > n_reference) throw ParameterError("stability: subset sizes must lie in [1, n_reference]");
    const auto books = per_pair_codebooks(n_reference, cfg);
    std::vector<std::size_t> all(n_reference);
    std::iota(all.begin(), all.end(), 0);
    const Codebook reference = merge_all(books, all);

    std::vector<StabilityPoint> curve;
    Rng rng(derive_seed(cfg.seed, detail::kTagSplit));
    for (std::size_t size : sizes) {
        StabilityPoint pt;
        pt.size = size;
        for (std::size_t r = 0; r < repeats; ++r) {
            std::vector<std::size_t> pool = all;
            rng.shuffle(pool);
            pool.resize(size);
            std::sort(pool.begin(), pool.end());
            pt.d1.push_back(codebook_distance(merge_all(books, pool), reference));
        }
        std::tie(pt.mean_d1, pt.std_d1) = mean_std(pt.d1);
        curve.push_back(std::move(pt));
    }
    return curve;
}

}  // namespace cdp
