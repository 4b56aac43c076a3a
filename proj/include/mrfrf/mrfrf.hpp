#pragma once

#include "mrfrf/core.hpp"
#include "mrfrf/signal.hpp"
#include "mrfrf/lti.hpp"
#include "mrfrf/loop_spec.hpp"
#include "mrfrf/multirate.hpp"
#include "mrfrf/spectral.hpp"
#include "mrfrf/loop_sim.hpp"
#include "mrfrf/lrm.hpp"
#include "mrfrf/lifted_ident.hpp"
#include "mrfrf/bench.hpp"
#include "mrfrf/validate.hpp"
#include "mrfrf/io.hpp"
