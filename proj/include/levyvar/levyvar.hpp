#pragma once

#include "levyvar/levy_model.hpp"
#include "levyvar/test_functions.hpp"
#include "levyvar/path_simulator.hpp"
#include "levyvar/variation_stats.hpp"
#include "levyvar/regime_oracle.hpp"
#include "levyvar/mc_harness.hpp"
#include "levyvar/config.hpp"
#include "levyvar/report.hpp"
#include "levyvar/suite.hpp"
