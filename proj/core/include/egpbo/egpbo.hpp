#pragma once

#include "egpbo/acquisition.hpp"
#include "egpbo/dataset.hpp"
#include "egpbo/engine.hpp"
#include "egpbo/ensemble.hpp"
#include "egpbo/errors.hpp"
#include "egpbo/experiment.hpp"
#include "egpbo/gp_expert.hpp"
#include "egpbo/hyperfit.hpp"
#include "egpbo/kernel.hpp"
#include "egpbo/objectives.hpp"
#include "egpbo/random.hpp"
#include "egpbo/rf_map.hpp"
#include "egpbo/run_record.hpp"
