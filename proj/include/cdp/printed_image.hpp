#pragma once

#include <string>

#include "cdp/matrix.hpp"

namespace cdp {

/// Acquired image of a printed code: (kL) x (kL) intensities in [0,1].
struct PrintedImage {
    ImageMatrix pixels;
    int k = 1;
    std::string source_id;
};

/// Recovered symbol matrix together with the estimator that produced it.
struct EstimatedTemplate {
    BitMatrix symbols;
    std::string estimator_id;
};

}  // namespace cdp
