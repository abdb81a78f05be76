#pragma once

#include "odcal/assignment.hpp"
#include "odcal/calibrators.hpp"
#include "odcal/core.hpp"
#include "odcal/experiment.hpp"
#include "odcal/io.hpp"
#include "odcal/metamodel.hpp"
#include "odcal/metrics.hpp"
#include "odcal/network.hpp"
#include "odcal/report.hpp"
#include "odcal/route_choice.hpp"
#include "odcal/simulator.hpp"
#include "odcal/synthetic.hpp"
