#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>

#include "cdp/error.hpp"
#include "cdp/estimator.hpp"
#include "cdp/hash.hpp"
#include "cdp/matrix.hpp"
#include "cdp/printed_image.hpp"
#include "cdp/rng.hpp"
#include "cdp/template_gen.hpp"

namespace cdp {

/// Simulated print-and-acquire channel.
struct ChannelParams {
    int k = 3;                    ///< pixels per symbol side
    double blur_sigma = 1.0;      ///< Gaussian PSF std, pixels
    double dot_gain_gamma = 0.7;  ///< coverage exponent; < 1 spreads ink
    double noise_sigma = 0.05;    ///< additive acquisition noise std
    std::uint64_t seed = 0;

    void validate() const {
        if (k < 1) throw ParameterError("channel: k must be >= 1");
        if (!(blur_sigma > 0.0)) throw ParameterError("channel: blur_sigma must be > 0");
        if (!(dot_gain_gamma > 0.0 && dot_gain_gamma <= 1.0))
            throw ParameterError("channel: dot_gain_gamma must lie in (0,1]");
        if (!(noise_sigma >= 0.0)) throw ParameterError("channel: noise_sigma must be >= 0");
    }

    /// Hash of the physics parameters; the seed is excluded.
    std::string hash() const {
        char buf[160];
        std::snprintf(buf, sizeof buf, "k=%d;blur=%.17g;gamma=%.17g;noise=%.17g", k, blur_sigma, dot_gain_gamma,
                      noise_sigma);
        return hex64(fnv1a64(buf));
    }

    ChannelParams with_seed(std::uint64_t s) const {
        ChannelParams p = *this;
        p.seed = s;
        return p;
    }
};

/// Simulated printer presets. A has a strong dot gain and moderate noise;
/// B is nearly linear but noisier.
inline ChannelParams printer_a() { return {3, 1.25, 0.45, 0.25, 0}; }
inline ChannelParams printer_b() { return {3, 1.1, 0.9, 0.35, 0}; }

/// Normalized (2w+1)^2 Gaussian kernel. The last element absorbs the
/// rounding residual so that the row-major sum is exactly 1.
inline ImageMatrix gaussian_kernel(double sigma, int half_width) {
    if (!(sigma > 0.0)) throw ParameterError("gaussian_kernel: sigma must be > 0");
    if (half_width < 1) throw ParameterError("gaussian_kernel: half_width must be >= 1");
    const auto n = static_cast<std::size_t>(2 * half_width + 1);
    ImageMatrix kernel(n, n);
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            const double dy = static_cast<double>(r) - half_width;
            const double dx = static_cast<double>(c) - half_width;
            kernel(r, c) = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            total += kernel(r, c);
        }
    }
    auto w = kernel.values();
    double partial = 0.0;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
        w[i] /= total;
        partial += w[i];
    }
    w.back() = 1.0 - partial;
    return kernel;
}

/// Index into [0, n) under symmetric reflection (d c b a | a b c d | d c b a).
inline std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
    const auto period = static_cast<std::ptrdiff_t>(2 * n);
    std::ptrdiff_t m = i % period;
    if (m < 0) m += period;
    return static_cast<std::size_t>(m < static_cast<std::ptrdiff_t>(n) ? m : period - 1 - m);
}

/// 2-D convolution with reflect-padded borders. Kernel taps are accumulated
/// in row-major order.
inline ImageMatrix convolve_reflect(const ImageMatrix& src, const ImageMatrix& kernel) {
    const auto hw = static_cast<std::ptrdiff_t>(kernel.rows() / 2);
    const std::size_t rows = src.rows(), cols = src.cols();
    ImageMatrix out(rows, cols);
    std::vector<std::size_t> col_idx(cols + 2 * static_cast<std::size_t>(hw));
    for (std::size_t c = 0; c < col_idx.size(); ++c)
        col_idx[c] = reflect_index(static_cast<std::ptrdiff_t>(c) - hw, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        auto dst = out.row(r);
        for (std::size_t c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (std::ptrdiff_t dr = -hw; dr <= hw; ++dr) {
                const auto src_row = src.row(reflect_index(static_cast<std::ptrdiff_t>(r) + dr, rows));
                const auto krow = kernel.row(static_cast<std::size_t>(dr + hw));
                const std::size_t* idx = col_idx.data() + c;
                for (std::size_t dc = 0; dc < krow.size(); ++dc) acc += krow[dc] * src_row[idx[dc]];
            }
            dst[c] = acc;
        }
    }
    return out;
}

/// Print a template and acquire it: nearest upsample to ink coverage,
/// Gaussian ink spread, dot-gain exponent, inversion to intensity, then
/// additive Gaussian noise with clamping to [0,1].
inline PrintedImage print_code(const Template& t, const ChannelParams& params) {
    params.validate();
    ImageMatrix coverage(t.symbols.rows() * static_cast<std::size_t>(params.k),
                         t.symbols.cols() * static_cast<std::size_t>(params.k));
    {
        const BitMatrix up = upsample_nearest(t.symbols, static_cast<std::size_t>(params.k));
        auto dst = coverage.values();
        auto src = up.values();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] ? 1.0 : 0.0;
    }
    const int half_width = static_cast<int>(std::ceil(3.0 * params.blur_sigma));
    ImageMatrix pixels = convolve_reflect(coverage, gaussian_kernel(params.blur_sigma, half_width));

    Rng rng(params.seed);
    const bool noisy = params.noise_sigma > 0.0;
    for (double& v : pixels.values()) {
        const double u = std::clamp(v, 0.0, 1.0);
        double intensity = 1.0 - std::pow(u, params.dot_gain_gamma);
        if (noisy) intensity += params.noise_sigma * rng.normal();
        v = std::clamp(intensity, 0.0, 1.0);
    }
    return {std::move(pixels), params.k, "print:" + params.hash()};
}

/// Estimate-and-reprint counterfeit of an acquired original.
inline PrintedImage make_fake(const PrintedImage& x, const ChannelParams& reprint,
                              const Estimator& estimator = otsu_majority_estimator()) {
    const auto k = static_cast<std::size_t>(x.k);
    if (x.k < 1 || x.pixels.rows() % k != 0 || x.pixels.cols() % k != 0)
        throw DimensionError("make_fake: image dimensions are not multiples of k");
    const EstimatedTemplate est = estimator(x, x.k);
    PrintedImage fake = print_code(Template{est.symbols, 0.5, 0}, reprint);
    fake.source_id = "fake:" + estimator.id() + ":" + x.source_id + ":" + reprint.hash();
    return fake;
}

}  // namespace cdp
