#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "cdp/codebook.hpp"
#include "cdp/error.hpp"
#include "cdp/hash.hpp"
#include "cdp/matrix.hpp"
#include "cdp/printed_image.hpp"
#include "cdp/template_gen.hpp"

namespace cdp {

enum class MetricId { LLS, MSE, PCOR, HAMM, M_LLS, M_MSE, M_PCOR, M_HAMM };

inline constexpr std::array<MetricId, 8> kAllMetrics{MetricId::LLS,   MetricId::MSE,   MetricId::PCOR,
                                                     MetricId::HAMM,  MetricId::M_LLS, MetricId::M_MSE,
                                                     MetricId::M_PCOR, MetricId::M_HAMM};

inline std::string_view to_string(MetricId m) {
    switch (m) {
        case MetricId::LLS: return "LLS";
        case MetricId::MSE: return "MSE";
        case MetricId::PCOR: return "PCOR";
        case MetricId::HAMM: return "HAMM";
        case MetricId::M_LLS: return "M-LLS";
        case MetricId::M_MSE: return "M-MSE";
        case MetricId::M_PCOR: return "M-PCOR";
        case MetricId::M_HAMM: return "M-HAMM";
    }
    return "?";
}

inline MetricId parse_metric(std::string_view s) {
    for (MetricId m : kAllMetrics)
        if (to_string(m) == s) return m;
    throw ParameterError("unknown metric '" + std::string(s) + "'");
}

inline bool is_masked(MetricId m) { return m >= MetricId::M_LLS; }

inline MetricId unmasked(MetricId m) {
    return is_masked(m) ? static_cast<MetricId>(static_cast<int>(m) - 4) : m;
}

enum class Orientation { higher_is_original, lower_is_original };

inline Orientation orientation(MetricId m) {
    const MetricId base = unmasked(m);
    return base == MetricId::LLS || base == MetricId::PCOR ? Orientation::higher_is_original
                                                           : Orientation::lower_is_original;
}

struct Score {
    double value = 0.0;
    MetricId metric = MetricId::LLS;
    std::size_t fallback_count = 0;
    bool degenerate = false;

    Orientation orientation() const { return cdp::orientation(metric); }
    /// Value on the common axis where larger means "more likely original".
    double oriented() const { return orientation() == Orientation::higher_is_original ? value : -value; }
};

/// Symbols whose training-time bit-error probability is below mu.
struct AttentionMask {
    BitMatrix bits;
    double mu = 0.25;
    std::string codebook_hash;

    std::size_t support() const {
        std::size_t n = 0;
        for (auto b : bits.values()) n += b;
        return n;
    }
};

inline std::string codebook_fingerprint(const Codebook& cb) {
    const auto& c = cb.config();
    std::string buf = std::to_string(c.h) + "/" + std::to_string(c.k) + "/" + c.estimator_id + "/" +
                      std::string(to_string(c.border)) + "/" + c.lineage;
    for (const auto& [code, e] : cb.entries())
        buf += ";" + std::to_string(code) + ":" + std::to_string(e.count) + ":" + std::to_string(e.p_sum) + ":" +
               std::to_string(e.pb_sum);
    return hex64(fnv1a64(buf));
}

namespace detail {

inline void check_lls_inputs(const EstimatedTemplate& t_est, const Template& t, const Codebook& cb) {
    if (!t_est.symbols.same_shape(t.symbols)) throw DimensionError("lls: estimate and template shapes differ");
    if (t_est.estimator_id != cb.config().estimator_id)
        throw CompatibilityError("lls: codebook trained with estimator '" + cb.config().estimator_id +
                                 "' but probe estimated with '" + t_est.estimator_id + "'");
}

template <typename Admit>
Score lls_impl(const EstimatedTemplate& t_est, const Template& t, const Codebook& cb, MetricId id, Admit admit) {
    detail::check_lls_inputs(t_est, t, cb);
    const int h = cb.h();
    const BorderMode mode = cb.config().border;
    Score s{0.0, id};
    std::size_t used = 0;
    for_each_admitted(t.symbols.rows(), t.symbols.cols(), h, mode, [&](std::size_t i, std::size_t j) {
        if (!admit(i, j)) return;
        const QueryResult q = cb.query(encode_neighborhood(t.symbols, i, j, h, mode));
        s.fallback_count += q.fallback;
        s.value += std::log(1.0 - std::abs(static_cast<double>(t_est.symbols(i, j)) - q.p));
        ++used;
    });
    s.degenerate = used == 0;
    return s;
}

}  // namespace detail

/// Posterior log-likelihood of the estimated template given the reference
/// template: sum over admitted symbols of log(1 - |t~ - P(omega)|).
inline Score lls_score(const EstimatedTemplate& t_est, const Template& t, const Codebook& cb) {
    return detail::lls_impl(t_est, t, cb, MetricId::LLS, [](std::size_t, std::size_t) { return true; });
}

inline AttentionMask build_mask(const Template& t, const Codebook& cb, double mu) {
    if (!(mu >= 0.0)) throw ParameterError("build_mask: mu must be >= 0");
    mu = std::min(mu, 1.0);
    const int h = cb.h();
    const BorderMode mode = cb.config().border;
    AttentionMask m{BitMatrix(t.symbols.rows(), t.symbols.cols(), 0), mu, codebook_fingerprint(cb)};
    for_each_admitted(t.symbols.rows(), t.symbols.cols(), h, mode, [&](std::size_t i, std::size_t j) {
        m.bits(i, j) = cb.lookup(encode_neighborhood(t.symbols, i, j, h, mode).code).pb < mu ? 1 : 0;
    });
    return m;
}

namespace detail {

/// Ideal print of t on the pixel grid: black 0.0, white 1.0.
inline ImageMatrix ideal_intensity(const Template& t, std::size_t k) {
    ImageMatrix out(t.symbols.rows() * k, t.symbols.cols() * k);
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = t.symbols(r / k, c / k) ? 0.0 : 1.0;
    return out;
}

inline void check_pixel_inputs(const Template& t, const PrintedImage& y, int k) {
    if (k < 1) throw ParameterError("pixel metric: k must be >= 1");
    const auto kk = static_cast<std::size_t>(k);
    if (y.pixels.rows() != t.symbols.rows() * kk || y.pixels.cols() != t.symbols.cols() * kk)
        throw DimensionError("pixel metric: probe is not k times the template size");
}

/// MSE or Pearson correlation over the pixels where weight(r, c) is set.
template <typename Weight>
Score pixel_impl(const Template& t, const PrintedImage& y, MetricId kind, int k, Weight use) {
    check_pixel_inputs(t, y, k);
    const ImageMatrix ref = ideal_intensity(t, static_cast<std::size_t>(k));
    Score s{0.0, kind};
    std::size_t n = 0;
    if (unmasked(kind) == MetricId::MSE) {
        double acc = 0.0;
        for (std::size_t r = 0; r < ref.rows(); ++r)
            for (std::size_t c = 0; c < ref.cols(); ++c) {
                if (!use(r, c)) continue;
                const double d = ref(r, c) - y.pixels(r, c);
                acc += d * d;
                ++n;
            }
        s.degenerate = n == 0;
        s.value = n ? acc / static_cast<double>(n) : 0.0;
        return s;
    }
    double sa = 0.0, sb = 0.0;
    bool const_a = true, const_b = true;
    double first_a = 0.0, first_b = 0.0;
    for (std::size_t r = 0; r < ref.rows(); ++r)
        for (std::size_t c = 0; c < ref.cols(); ++c) {
            if (!use(r, c)) continue;
            if (n == 0) {
                first_a = ref(r, c);
                first_b = y.pixels(r, c);
            }
            const_a = const_a && ref(r, c) == first_a;
            const_b = const_b && y.pixels(r, c) == first_b;
            sa += ref(r, c);
            sb += y.pixels(r, c);
            ++n;
        }
    if (n == 0 || const_a || const_b) {
        s.degenerate = true;
        return s;
    }
    const double ma = sa / static_cast<double>(n), mb = sb / static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t r = 0; r < ref.rows(); ++r)
        for (std::size_t c = 0; c < ref.cols(); ++c) {
            if (!use(r, c)) continue;
            const double a = ref(r, c) - ma, b = y.pixels(r, c) - mb;
            sab += a * b;
            saa += a * a;
            sbb += b * b;
        }
    if (saa == 0.0 || sbb == 0.0) {
        s.degenerate = true;
        return s;
    }
    s.value = sab / std::sqrt(saa * sbb);
    return s;
}

}  // namespace detail

/// MSE or Pearson correlation between the ideal print of t and the probe.
inline Score pixel_metric(const Template& t, const PrintedImage& y, MetricId kind, int k) {
    if (kind != MetricId::MSE && kind != MetricId::PCOR) throw ParameterError("pixel_metric: kind must be MSE or PCOR");
    return detail::pixel_impl(t, y, kind, k, [](std::size_t, std::size_t) { return true; });
}

/// Fraction of symbols where the estimate differs from the template.
inline Score hamming_metric(const EstimatedTemplate& t_est, const Template& t) {
    if (!t_est.symbols.same_shape(t.symbols)) throw DimensionError("hamming: shapes differ");
    Score s{0.0, MetricId::HAMM};
    if (t.symbols.empty()) {
        s.degenerate = true;
        return s;
    }
    std::size_t diff = 0;
    auto a = t_est.symbols.values();
    auto b = t.symbols.values();
    for (std::size_t i = 0; i < a.size(); ++i) diff += a[i] != b[i];
    s.value = static_cast<double>(diff) / static_cast<double>(a.size());
    return s;
}

inline void check_mask(const AttentionMask& mask, const Template& t) {
    if (!mask.bits.same_shape(t.symbols)) throw DimensionError("mask and template shapes differ");
}

/// LLS restricted to symbols kept by the mask (sum, not normalized).
inline Score masked_lls(const EstimatedTemplate& t_est, const Template& t, const Codebook& cb,
                        const AttentionMask& mask) {
    check_mask(mask, t);
    return detail::lls_impl(t_est, t, cb, MetricId::M_LLS,
                            [&](std::size_t i, std::size_t j) { return mask.bits(i, j) != 0; });
}

/// Pixel metric over pixels of kept symbols (mask upsampled by k),
/// normalized by the number of kept pixels.
inline Score masked_pixel_metric(const Template& t, const PrintedImage& y, const AttentionMask& mask, MetricId kind,
                                 int k) {
    if (unmasked(kind) != MetricId::MSE && unmasked(kind) != MetricId::PCOR)
        throw ParameterError("masked_pixel_metric: kind must be MSE or PCOR");
    check_mask(mask, t);
    const MetricId id = unmasked(kind) == MetricId::MSE ? MetricId::M_MSE : MetricId::M_PCOR;
    const auto kk = static_cast<std::size_t>(std::max(k, 1));
    return detail::pixel_impl(t, y, id, k, [&](std::size_t r, std::size_t c) { return mask.bits(r / kk, c / kk) != 0; });
}

/// Hamming distance over kept symbols, normalized by their number.
inline Score masked_hamming(const EstimatedTemplate& t_est, const Template& t, const AttentionMask& mask) {
    if (!t_est.symbols.same_shape(t.symbols)) throw DimensionError("hamming: shapes differ");
    check_mask(mask, t);
    Score s{0.0, MetricId::M_HAMM};
    std::size_t diff = 0, n = 0;
    auto a = t_est.symbols.values();
    auto b = t.symbols.values();
    auto m = mask.bits.values();
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!m[i]) continue;
        ++n;
        diff += a[i] != b[i];
    }
    s.degenerate = n == 0;
    s.value = n ? static_cast<double>(diff) / static_cast<double>(n) : 0.0;
    return s;
}

/// Everything needed to score one probe against one reference template.
struct ProbeContext {
    const Template& t;
    const PrintedImage& y;
    const EstimatedTemplate& t_est;
    const Codebook& cb;
    const AttentionMask& mask;
    int k;
};

inline Score score_probe(MetricId m, const ProbeContext& p) {
    switch (m) {
        case MetricId::LLS: return lls_score(p.t_est, p.t, p.cb);
        case MetricId::MSE:
        case MetricId::PCOR: return pixel_metric(p.t, p.y, m, p.k);
        case MetricId::HAMM: return hamming_metric(p.t_est, p.t);
        case MetricId::M_LLS: return masked_lls(p.t_est, p.t, p.cb, p.mask);
        case MetricId::M_MSE:
        case MetricId::M_PCOR: return masked_pixel_metric(p.t, p.y, p.mask, m, p.k);
        case MetricId::M_HAMM: return masked_hamming(p.t_est, p.t, p.mask);
    }
    throw ParameterError("score_probe: unknown metric");
}

}  // namespace cdp
