#pragma once

#include "biflab/complex.hpp"
#include "biflab/config.hpp"
#include "biflab/dimension.hpp"
#include "biflab/error.hpp"
#include "biflab/family.hpp"
#include "biflab/io.hpp"
#include "biflab/laminar.hpp"
#include "biflab/lyapunov.hpp"
#include "biflab/measure.hpp"
#include "biflab/parallel.hpp"
#include "biflab/pipeline.hpp"
#include "biflab/polynomial.hpp"
#include "biflab/potential.hpp"
#include "biflab/projective.hpp"
#include "biflab/rational_map.hpp"
#include "biflab/region.hpp"
