#pragma once

#include "fptab/attacks.hpp"
#include "fptab/codes.hpp"
#include "fptab/correlation.hpp"
#include "fptab/dataset.hpp"
#include "fptab/density.hpp"
#include "fptab/errors.hpp"
#include "fptab/fingerprint.hpp"
#include "fptab/keyed_stream.hpp"
#include "fptab/metrics.hpp"
#include "fptab/neighbourhood.hpp"
