#pragma once

#include "dataset.hpp"
#include "dcp.hpp"
#include "error.hpp"
#include "filters.hpp"
#include "image.hpp"
#include "losses.hpp"
#include "metrics.hpp"
#include "progressive.hpp"
#include "report.hpp"
#include "scattering.hpp"
