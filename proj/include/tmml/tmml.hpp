#pragma once

#include <tmml/belief.hpp>
#include <tmml/config.hpp>
#include <tmml/error.hpp>
#include <tmml/experiment.hpp>
#include <tmml/histogram_io.hpp>
#include <tmml/hurricane.hpp>
#include <tmml/joint_clustering.hpp>
#include <tmml/kalman.hpp>
#include <tmml/kmeans.hpp>
#include <tmml/mixture.hpp>
#include <tmml/planner.hpp>
#include <tmml/posterior.hpp>
#include <tmml/probability.hpp>
#include <tmml/regions.hpp>
#include <tmml/rng.hpp>
#include <tmml/traffic.hpp>
#include <tmml/traffic_grid.hpp>
