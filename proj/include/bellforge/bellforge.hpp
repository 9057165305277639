#pragma once

#include "bellforge/errors.hpp"
#include "bellforge/operator.hpp"
#include "bellforge/quantum.hpp"
#include "bellforge/filtering.hpp"
#include "bellforge/simplex.hpp"
#include "bellforge/polytope.hpp"
#include "bellforge/witness.hpp"
#include "bellforge/locc.hpp"
#include "bellforge/decomposition.hpp"
#include "bellforge/example.hpp"
