#pragma once

#include "docp/config.hpp"
#include "docp/continuation.hpp"
#include "docp/endpoint.hpp"
#include "docp/extremal.hpp"
#include "docp/grid.hpp"
#include "docp/integrate.hpp"
#include "docp/problem.hpp"
#include "docp/run.hpp"
#include "docp/shooting.hpp"
#include "docp/trajectory.hpp"
