#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cdp/error.hpp"
#include "cdp/estimator.hpp"
#include "cdp/matrix.hpp"
#include "cdp/parallel.hpp"
#include "cdp/printed_image.hpp"
#include "cdp/template_gen.hpp"

namespace cdp {

/// How symbols near the template border are handled.
enum class BorderMode {
    interior,   ///< only symbols with a full h x h window are used
    white_pad,  ///< every symbol; the window reads white outside the template
};

inline std::string_view to_string(BorderMode m) { return m == BorderMode::interior ? "interior" : "white_pad"; }

inline BorderMode parse_border_mode(std::string_view s) {
    if (s == "interior") return BorderMode::interior;
    if (s == "white_pad" || s == "white-pad" || s == "pad") return BorderMode::white_pad;
    throw ParameterError("unknown border mode '" + std::string(s) + "'");
}

inline constexpr int kMaxNeighborhood = 7;

/// h x h window bits, row-major, top-left bit most significant.
struct NeighborhoodCode {
    std::uint64_t code = 0;
    int h = 3;

    bool center_bit() const noexcept { return (code >> (h * h / 2)) & 1U; }
    friend bool operator==(const NeighborhoodCode&, const NeighborhoodCode&) = default;
};

inline void check_codebook_h(int h) {
    check_neighborhood_size(h);
    if (h > kMaxNeighborhood) throw ParameterError("neighborhood size h must be <= 7");
}

inline NeighborhoodCode encode_neighborhood(const BitMatrix& t, std::size_t i, std::size_t j, int h,
                                            BorderMode mode) {
    check_codebook_h(h);
    const auto r = static_cast<std::ptrdiff_t>(h / 2);
    const auto ii = static_cast<std::ptrdiff_t>(i);
    const auto jj = static_cast<std::ptrdiff_t>(j);
    const auto rows = static_cast<std::ptrdiff_t>(t.rows());
    const auto cols = static_cast<std::ptrdiff_t>(t.cols());
    const bool inside = ii - r >= 0 && jj - r >= 0 && ii + r < rows && jj + r < cols;
    if (!inside && (mode == BorderMode::interior || ii >= rows || jj >= cols))
        throw DimensionError("encode_neighborhood: window leaves the template");
    std::uint64_t code = 0;
    for (std::ptrdiff_t a = ii - r; a <= ii + r; ++a) {
        for (std::ptrdiff_t b = jj - r; b <= jj + r; ++b) {
            const bool in = a >= 0 && b >= 0 && a < rows && b < cols;
            code = (code << 1) | (in ? (t(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) & 1U) : 0U);
        }
    }
    return {code, h};
}

/// Calls fn(i, j) for every symbol admitted under the border mode, row-major.
template <typename Fn>
void for_each_admitted(std::size_t rows, std::size_t cols, int h, BorderMode mode, Fn&& fn) {
    const std::size_t margin = mode == BorderMode::interior ? static_cast<std::size_t>(h / 2) : 0;
    if (rows < 2 * margin || cols < 2 * margin) return;
    for (std::size_t i = margin; i < rows - margin; ++i)
        for (std::size_t j = margin; j < cols - margin; ++j) fn(i, j);
}

/// Integer accumulators for one neighborhood: number of observations, number
/// of black estimates, number of bit flips.
struct CodebookEntry {
    std::uint64_t count = 0;
    std::uint64_t p_sum = 0;
    std::uint64_t pb_sum = 0;

    double p() const noexcept { return count ? static_cast<double>(p_sum) / static_cast<double>(count) : 0.0; }
    double pb() const noexcept { return count ? static_cast<double>(pb_sum) / static_cast<double>(count) : 0.0; }

    CodebookEntry& operator+=(const CodebookEntry& o) noexcept {
        count += o.count;
        p_sum += o.p_sum;
        pb_sum += o.pb_sum;
        return *this;
    }
    friend bool operator==(const CodebookEntry&, const CodebookEntry&) = default;
};

struct CodebookConfig {
    int h = 3;
    int k = 3;
    std::string estimator_id = kOtsuMajorityId;
    BorderMode border = BorderMode::interior;
    double epsilon = 1e-4;
    std::string lineage;  ///< channel identity of the training originals

    friend bool operator==(const CodebookConfig&, const CodebookConfig&) = default;
};

struct QueryResult {
    double p = 0.0;
    double pb = 0.0;
    bool fallback = false;
};

/// Learned neighborhood statistics of one print-acquire-estimate system.
/// Means are derived on read from integer sums, so merging is exact.
class Codebook {
public:
    Codebook() = default;
    explicit Codebook(CodebookConfig cfg) : cfg_(std::move(cfg)) {
        check_codebook_h(cfg_.h);
        if (cfg_.k < 1) throw ParameterError("codebook: k must be >= 1");
        if (!(cfg_.epsilon >= 0.0 && cfg_.epsilon < 0.5)) throw ParameterError("codebook: epsilon must lie in [0,0.5)");
    }

    const CodebookConfig& config() const noexcept { return cfg_; }
    int h() const noexcept { return cfg_.h; }
    const std::map<std::uint64_t, CodebookEntry>& entries() const noexcept { return entries_; }
    const CodebookEntry& global() const noexcept { return global_; }
    double global_p() const noexcept { return global_.p(); }
    double global_pb() const noexcept { return global_.pb(); }

    /// Record one observation: template neighborhood, true and estimated symbol.
    void observe(std::uint64_t code, bool truth, bool estimate) {
        CodebookEntry obs{1, estimate ? 1U : 0U, truth != estimate ? 1U : 0U};
        entries_[code] += obs;
        global_ += obs;
    }

    /// Add raw accumulators (used by deserialization and merging).
    void add_entry(std::uint64_t code, const CodebookEntry& e) {
        if (code >> (cfg_.h * cfg_.h)) throw ParameterError("codebook: code out of range for h");
        if (e.p_sum > e.count || e.pb_sum > e.count) throw ParameterError("codebook: sums exceed count");
        entries_[code] += e;
        global_ += e;
    }

    /// Unclamped stored statistics, global means for unseen codes.
    QueryResult lookup(std::uint64_t code) const {
        const auto it = entries_.find(code);
        if (it == entries_.end() || it->second.count == 0) return {global_p(), global_pb(), true};
        return {it->second.p(), it->second.pb(), false};
    }

    /// Statistics clamped to [epsilon, 1 - epsilon] for use inside logarithms.
    QueryResult query(const NeighborhoodCode& omega) const {
        if (omega.h != cfg_.h) throw CompatibilityError("codebook query: neighborhood size mismatch");
        QueryResult r = lookup(omega.code);
        const double lo = cfg_.epsilon, hi = 1.0 - cfg_.epsilon;
        r.p = std::clamp(r.p, lo, hi);
        r.pb = std::clamp(r.pb, lo, hi);
        return r;
    }

    friend bool operator==(const Codebook&, const Codebook&) = default;

private:
    CodebookConfig cfg_;
    std::map<std::uint64_t, CodebookEntry> entries_;
    CodebookEntry global_;
};

/// Accumulate one (template, estimate) pair into the codebook.
inline void accumulate(Codebook& cb, const BitMatrix& t, const BitMatrix& t_est) {
    if (!t.same_shape(t_est)) throw DimensionError("accumulate: template and estimate shapes differ");
    const int h = cb.h();
    const BorderMode mode = cb.config().border;
    for_each_admitted(t.rows(), t.cols(), h, mode, [&](std::size_t i, std::size_t j) {
        cb.observe(encode_neighborhood(t, i, j, h, mode).code, t(i, j) != 0, t_est(i, j) != 0);
    });
}

inline void check_mergeable(const CodebookConfig& a, const CodebookConfig& b) {
    if (a.h != b.h || a.k != b.k || a.estimator_id != b.estimator_id || a.border != b.border ||
        a.lineage != b.lineage)
        throw CompatibilityError("codebook merge: configurations differ");
}

inline Codebook merge(const Codebook& a, const Codebook& b) {
    check_mergeable(a.config(), b.config());
    Codebook out = a;
    for (const auto& [code, e] : b.entries()) out.add_entry(code, e);
    return out;
}

/// Codebook from already-estimated templates (bypasses printing and estimation).
inline Codebook train_from_estimates(std::span<const Template> templates, std::span<const BitMatrix> estimates,
                                     const CodebookConfig& cfg) {
    if (templates.empty()) throw ParameterError("train: empty training set");
    if (templates.size() != estimates.size()) throw DimensionError("train: template/estimate count mismatch");
    Codebook cb(cfg);
    for (std::size_t n = 0; n < templates.size(); ++n) accumulate(cb, templates[n].symbols, estimates[n]);
    return cb;
}

/// Predictor training: estimate every original, then accumulate the
/// estimated symbol and its bit-flip indicator under the template
/// neighborhood. Pairs are processed in parallel and merged.
inline Codebook train_codebook(std::span<const Template> templates, std::span<const PrintedImage> printed,
                               CodebookConfig cfg, const Estimator& estimator = otsu_majority_estimator(),
                               unsigned threads = 1) {
    if (templates.empty()) throw ParameterError("train: empty training set");
    if (templates.size() != printed.size()) throw DimensionError("train: template/image count mismatch");
    cfg.estimator_id = estimator.id();
    if (cfg.lineage.empty()) {
        cfg.lineage = printed.front().source_id;
        for (const auto& x : printed)
            if (x.source_id != cfg.lineage) {
                cfg.lineage = "mixed";
                break;
            }
    }
    for (std::size_t n = 0; n < templates.size(); ++n) {
        const auto k = static_cast<std::size_t>(cfg.k);
        if (printed[n].pixels.rows() != templates[n].symbols.rows() * k ||
            printed[n].pixels.cols() != templates[n].symbols.cols() * k)
            throw DimensionError("train: printed image is not k times the template size");
    }
    std::vector<Codebook> partial(templates.size(), Codebook(cfg));
    parallel_for(templates.size(), threads, [&](std::size_t n) {
        accumulate(partial[n], templates[n].symbols, estimator(printed[n], cfg.k).symbols);
    });
    Codebook cb(cfg);
    for (const auto& p : partial) cb = merge(cb, p);
    return cb;
}

/// Mean absolute difference of P over the union of observed codes; a code
/// missing from one side contributes that side's global mean.
inline double codebook_distance(const Codebook& a, const Codebook& ref) {
    if (a.h() != ref.h()) throw CompatibilityError("codebook_distance: neighborhood size mismatch");
    std::vector<std::uint64_t> codes;
    for (const auto& [c, e] : a.entries()) codes.push_back(c);
    for (const auto& [c, e] : ref.entries()) codes.push_back(c);
    std::sort(codes.begin(), codes.end());
    codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
    if (codes.empty()) return 0.0;
    double total = 0.0;
    for (auto c : codes) total += std::abs(a.lookup(c).p - ref.lookup(c).p);
    return total / static_cast<double>(codes.size());
}

}  // namespace cdp
