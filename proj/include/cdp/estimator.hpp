#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>

#include "cdp/error.hpp"
#include "cdp/matrix.hpp"
#include "cdp/printed_image.hpp"

namespace cdp {

inline constexpr int kHistogramBins = 256;

/// 8-bit histogram bin of an intensity. Rounds half down so that
/// `intensity_bin(v) <= t` holds exactly when `v <= otsu_bin_boundary(t)`.
inline int intensity_bin(double v) {
    const double b = std::ceil(v * 255.0 - 0.5);
    return static_cast<int>(std::clamp(b, 0.0, 255.0));
}

/// Threshold separating bins [0, t] from [t+1, 255].
inline double otsu_bin_boundary(int t) { return (t + 0.5) / 255.0; }

using Histogram = std::array<std::uint64_t, kHistogramBins>;

inline Histogram intensity_histogram(const ImageMatrix& img) {
    Histogram hist{};
    for (double v : img.values()) ++hist[static_cast<std::size_t>(intensity_bin(v))];
    return hist;
}

/// Between-class variance (up to the constant factor 1/N^2) of splitting the
/// histogram into a lower class of n0 pixels with bin sum s0 and an upper
/// class of n1 pixels with bin sum s1.
inline double between_class_variance(std::uint64_t n0, std::uint64_t s0, std::uint64_t n1, std::uint64_t s1) {
    const auto d = static_cast<double>(static_cast<std::int64_t>(n1 * s0) - static_cast<std::int64_t>(n0 * s1));
    return d * d / (static_cast<double>(n0) * static_cast<double>(n1));
}

struct OtsuResult {
    double threshold = 0.0;
    int bin = -1;  ///< last bin of the dark class; -1 when degenerate
    bool degenerate = false;
};

/// Global Otsu threshold over a 256-bin histogram. Maximum ties resolve to
/// the lowest split. A single-class image is degenerate and its threshold is
/// the image minimum (the constant value for constant images).
inline OtsuResult otsu_threshold(const ImageMatrix& img) {
    if (img.empty()) throw ParameterError("otsu_threshold: empty image");
    const Histogram hist = intensity_histogram(img);
    std::uint64_t total = 0, total_sum = 0;
    for (int b = 0; b < kHistogramBins; ++b) {
        total += hist[b];
        total_sum += hist[b] * static_cast<std::uint64_t>(b);
    }

    OtsuResult best;
    double best_var = -1.0;
    std::uint64_t n0 = 0, s0 = 0;
    for (int t = 0; t < kHistogramBins - 1; ++t) {
        n0 += hist[t];
        s0 += hist[t] * static_cast<std::uint64_t>(t);
        const std::uint64_t n1 = total - n0;
        if (n0 == 0 || n1 == 0) continue;
        const double var = between_class_variance(n0, s0, n1, total_sum - s0);
        if (var > best_var) {
            best_var = var;
            best.bin = t;
        }
    }
    if (best.bin < 0) {
        best.degenerate = true;
        best.threshold = *std::min_element(img.values().begin(), img.values().end());
    } else {
        best.threshold = otsu_bin_boundary(best.bin);
    }
    return best;
}

inline OtsuResult otsu_threshold(const PrintedImage& img) { return otsu_threshold(img.pixels); }

/// Pixels at or below the threshold are black (1).
inline BitMatrix binarize(const ImageMatrix& img, double thr) {
    BitMatrix out(img.rows(), img.cols());
    auto src = img.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] <= thr ? 1 : 0;
    return out;
}

/// Per-symbol vote over k x k pixel patches; a tie (even k*k) votes black.
inline BitMatrix majority_vote(const BitMatrix& bits, int k) {
    if (k < 1) throw ParameterError("majority_vote: k must be >= 1");
    const auto kk = static_cast<std::size_t>(k);
    if (bits.rows() % kk != 0 || bits.cols() % kk != 0)
        throw DimensionError("majority_vote: image dimensions are not multiples of k");
    BitMatrix out(bits.rows() / kk, bits.cols() / kk);
    for (std::size_t i = 0; i < out.rows(); ++i) {
        for (std::size_t j = 0; j < out.cols(); ++j) {
            std::size_t ones = 0;
            for (std::size_t r = i * kk; r < (i + 1) * kk; ++r)
                for (std::size_t c = j * kk; c < (j + 1) * kk; ++c) ones += bits(r, c);
            out(i, j) = 2 * ones >= kk * kk ? 1 : 0;
        }
    }
    return out;
}

inline constexpr const char* kOtsuMajorityId = "otsu-mv";

/// Otsu binarization followed by majority voting. A degenerate (single-level)
/// image is classified by absolute level against mid-grey.
inline EstimatedTemplate estimate_template(const PrintedImage& img, int k) {
    if (img.pixels.empty()) throw ParameterError("estimate_template: empty image");
    const OtsuResult otsu = otsu_threshold(img.pixels);
    const double thr = otsu.degenerate ? 0.5 : otsu.threshold;
    return {majority_vote(binarize(img.pixels, thr), k), kOtsuMajorityId};
}

/// Pluggable x -> t~ estimator. Codebooks remember the id they were trained
/// with, so a different estimator must carry a different id.
class Estimator {
public:
    using Fn = std::function<BitMatrix(const PrintedImage&, int)>;

    Estimator(std::string id, Fn fn) : id_(std::move(id)), fn_(std::move(fn)) {}

    const std::string& id() const noexcept { return id_; }

    EstimatedTemplate operator()(const PrintedImage& img, int k) const { return {fn_(img, k), id_}; }

private:
    std::string id_;
    Fn fn_;
};

inline Estimator otsu_majority_estimator() {
    return Estimator(kOtsuMajorityId, [](const PrintedImage& img, int k) { return estimate_template(img, k).symbols; });
}

}  // namespace cdp
