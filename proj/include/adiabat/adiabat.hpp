#pragma once

#include "adiabat/analysis.hpp"
#include "adiabat/common.hpp"
#include "adiabat/dynamics.hpp"
#include "adiabat/experiment.hpp"
#include "adiabat/fields.hpp"
#include "adiabat/geometry.hpp"
#include "adiabat/grid.hpp"
#include "adiabat/io.hpp"
#include "adiabat/model.hpp"
#include "adiabat/models.hpp"
#include "adiabat/spectral.hpp"
#include "adiabat/version.hpp"
