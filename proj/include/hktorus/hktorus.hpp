#pragma once

#include "hktorus/error.hpp"
#include "hktorus/torus.hpp"
#include "hktorus/dynamics.hpp"
#include "hktorus/lyapunov.hpp"
#include "hktorus/graph_events.hpp"
#include "hktorus/trace.hpp"
#include "hktorus/analysis.hpp"
#include "hktorus/spectral.hpp"
#include "hktorus/io.hpp"
#include "hktorus/verify.hpp"
#include "hktorus/batch.hpp"
