#pragma once

#include "cdp/channel.hpp"
#include "cdp/codebook.hpp"
#include "cdp/error.hpp"
#include "cdp/estimator.hpp"
#include "cdp/evaluation.hpp"
#include "cdp/matrix.hpp"
#include "cdp/metrics.hpp"
#include "cdp/printed_image.hpp"
#include "cdp/rng.hpp"
#include "cdp/template_gen.hpp"
