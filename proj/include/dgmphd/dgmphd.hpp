#pragma once

#include "dgmphd/assignment.hpp"
#include "dgmphd/bandwidth.hpp"
#include "dgmphd/consensus.hpp"
#include "dgmphd/experiment.hpp"
#include "dgmphd/gaussian_mixture.hpp"
#include "dgmphd/linalg.hpp"
#include "dgmphd/metrics.hpp"
#include "dgmphd/phd_filter.hpp"
#include "dgmphd/random.hpp"
#include "dgmphd/scenario.hpp"
