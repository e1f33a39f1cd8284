#pragma once

#include "seqdrift/common.hpp"
#include "seqdrift/detector.hpp"
#include "seqdrift/discriminator.hpp"
#include "seqdrift/error.hpp"
#include "seqdrift/harness.hpp"
#include "seqdrift/oselm.hpp"
#include "seqdrift/reconstruction.hpp"
#include "seqdrift/running_stats.hpp"
#include "seqdrift/streams.hpp"
