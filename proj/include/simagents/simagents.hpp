#pragma once

#include "simagents/angles.hpp"
#include "simagents/bridge.hpp"
#include "simagents/collision.hpp"
#include "simagents/errors.hpp"
#include "simagents/export.hpp"
#include "simagents/heading.hpp"
#include "simagents/joint_ranking.hpp"
#include "simagents/metrics.hpp"
#include "simagents/oracle.hpp"
#include "simagents/predictor.hpp"
#include "simagents/report.hpp"
#include "simagents/rollout.hpp"
#include "simagents/rollout_io.hpp"
#include "simagents/scenario.hpp"
#include "simagents/scenario_io.hpp"
#include "simagents/wire.hpp"
