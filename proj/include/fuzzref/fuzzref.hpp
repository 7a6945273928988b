#pragma once

#include "formula.hpp"
#include "graddesc.hpp"
#include "harness.hpp"
#include "ilr.hpp"
#include "oracle.hpp"
#include "refine.hpp"
#include "semantics.hpp"
