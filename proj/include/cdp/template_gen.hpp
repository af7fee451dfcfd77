#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cdp/error.hpp"
#include "cdp/matrix.hpp"
#include "cdp/rng.hpp"

namespace cdp {

/// Digital blueprint of a copy detection pattern.
struct Template {
    BitMatrix symbols;
    double density = 0.5;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return symbols.rows(); }
};

/// i.i.d. Bernoulli(p) template, filled row-major from one Rng stream.
inline Template generate_template(std::size_t L, double p, std::uint64_t seed) {
    if (L < 1) throw ParameterError("template size must be >= 1");
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("black probability must lie in [0,1]");
    Rng rng(seed);
    Template t{BitMatrix(L, L), p, seed};
    for (auto& bit : t.symbols.values()) bit = rng.bernoulli(p) ? 1 : 0;
    return t;
}

inline Template pad_white(const Template& t, std::size_t w) {
    const std::size_t n = t.symbols.rows() + 2 * w;
    Template out{BitMatrix(n, t.symbols.cols() + 2 * w, 0), t.density, t.seed};
    for (std::size_t r = 0; r < t.symbols.rows(); ++r)
        for (std::size_t c = 0; c < t.symbols.cols(); ++c) out.symbols(r + w, c + w) = t.symbols(r, c);
    return out;
}

/// Coordinates whose full h x h window lies inside an L x L template.
struct InteriorIndex {
    std::vector<std::pair<std::size_t, std::size_t>> coords;
    std::size_t margin = 0;
};

inline void check_neighborhood_size(int h) {
    if (h < 1 || h % 2 == 0) throw ParameterError("neighborhood size h must be a positive odd integer");
}

inline InteriorIndex interior_index(std::size_t L, int h) {
    check_neighborhood_size(h);
    if (static_cast<std::size_t>(h) > L) throw ParameterError("neighborhood larger than template");
    InteriorIndex idx;
    idx.margin = static_cast<std::size_t>(h / 2);
    const std::size_t end = L - idx.margin;
    idx.coords.reserve((end - idx.margin) * (end - idx.margin));
    for (std::size_t i = idx.margin; i < end; ++i)
        for (std::size_t j = idx.margin; j < end; ++j) idx.coords.emplace_back(i, j);
    return idx;
}

}  // namespace cdp
