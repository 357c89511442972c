#pragma once

#include "rkdpp/approximants.hpp"
#include "rkdpp/config.hpp"
#include "rkdpp/core.hpp"
#include "rkdpp/design_io.hpp"
#include "rkdpp/designs.hpp"
#include "rkdpp/error_metrics.hpp"
#include "rkdpp/kernels.hpp"
#include "rkdpp/linalg.hpp"
#include "rkdpp/parallel.hpp"
#include "rkdpp/spectral_model.hpp"
#include "rkdpp/stats.hpp"
#include "rkdpp/study.hpp"
#include "rkdpp/verify.hpp"
